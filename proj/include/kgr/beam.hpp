#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "kgr/policy.hpp"

namespace kgr {

struct BeamConfig {
  int width = 100;      // B
  int path_length = 3;  // T

  void validate() const {
    if (width < 1) throw ConfigError("beam width must be >= 1");
    if (path_length < 1) throw ConfigError("beam path length must be >= 1");
  }
};

struct BeamPath {
  InstancePath path;
  double log_prob = 0.0;
};

namespace detail {

// Total order on partial paths for tie-breaking: interleaved
// (entity, relation, entity, ...) comparison, shorter prefix first.
inline int compare_paths(const InstancePath& a, const Action* a_ext, const InstancePath& b,
                         const Action* b_ext) {
  const std::size_t an = a.entities.size() + (a_ext ? 1 : 0);
  const std::size_t bn = b.entities.size() + (b_ext ? 1 : 0);
  auto entity_at = [](const InstancePath& p, const Action* ext, std::size_t i) {
    return i < p.entities.size() ? p.entities[i] : ext->target;
  };
  auto rel_at = [](const InstancePath& p, const Action* ext, std::size_t i) {
    return i < p.rels.size() ? p.rels[i] : ext->rel;
  };
  const std::size_t n = std::min(an, bn);
  for (std::size_t i = 0; i < n; ++i) {
    const EntityId ea = entity_at(a, a_ext, i), eb = entity_at(b, b_ext, i);
    if (ea != eb) return ea < eb ? -1 : 1;
    if (i + 1 < n) {
      const RelationId ra = rel_at(a, a_ext, i), rb = rel_at(b, b_ext, i);
      if (ra != rb) return ra < rb ? -1 : 1;
    }
  }
  if (an != bn) return an < bn ? -1 : 1;
  return 0;
}

}  // namespace detail

// Deterministic width-B beam search over T steps under a frozen policy.
// Each retained path carries the exact sum of its per-step log
// probabilities; score ties are broken by (entity id, relation id) order
// along the path. Output is sorted best-first.
inline std::vector<BeamPath> beam_search(const KnowledgeGraph& kg, const PolicyNetwork& net,
                                         EntityId source, const BeamConfig& cfg,
                                         std::optional<Triple> mask = std::nullopt) {
  cfg.validate();
  kg.entity_type(source);  // validates the id

  struct Elem {
    InstancePath path;
    double log_prob;
    AgentState state;  // encoded up to the current step
  };
  struct Candidate {
    std::size_t parent;
    Action action;
    double log_prob;
  };

  std::vector<Elem> beam;
  beam.push_back(Elem{InstancePath{{source}, {}}, 0.0, net.initial_state(source)});

  std::vector<ActionDistribution> dists;
  for (int t = 0; t < cfg.path_length; ++t) {
    dists.clear();
    dists.reserve(beam.size());
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      beam[i].state = net.encode_history(beam[i].state);
      dists.push_back(net.action_distribution(net.hidden_top(beam[i].state),
                                              kg.available_actions(beam[i].state.current, mask)));
      const ActionDistribution& dist = dists.back();
      for (std::size_t j = 0; j < dist.actions.size(); ++j) {
        candidates.push_back(Candidate{i, dist.actions[j],
                                       beam[i].log_prob +
                                           dist.log_probs[static_cast<Eigen::Index>(j)]});
      }
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return detail::compare_paths(beam[a.parent].path, &a.action, beam[b.parent].path,
                                   &b.action) < 0;
    };
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(cfg.width),
                                                   candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);
    candidates.resize(keep);

    std::vector<Elem> next;
    next.reserve(keep);
    for (const Candidate& c : candidates) {
      Elem e;
      e.path = beam[c.parent].path;
      e.path.rels.push_back(c.action.rel);
      e.path.entities.push_back(c.action.target);
      e.log_prob = c.log_prob;
      e.state = apply_action(beam[c.parent].state, c.action);
      next.push_back(std::move(e));
    }
    beam = std::move(next);
  }

  std::vector<BeamPath> out;
  out.reserve(beam.size());
  for (Elem& e : beam) out.push_back(BeamPath{std::move(e.path), e.log_prob});
  return out;
}

}  // namespace kgr
