#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgr/beam.hpp"
#include "kgr/rules.hpp"
#include "kgr/training.hpp"

namespace kgr {

enum class RankingMode { full, pruned };
enum class Aggregation { max, sum };

inline std::string to_string(RankingMode m) { return m == RankingMode::full ? "full" : "pruned"; }
inline std::string to_string(Aggregation a) { return a == Aggregation::max ? "max" : "sum"; }

inline RankingMode parse_ranking_mode(std::string_view s) {
  if (s == "full") return RankingMode::full;
  if (s == "pruned") return RankingMode::pruned;
  throw ConfigError("mode must be 'full' or 'pruned', got '" + std::string(s) + "'");
}

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::max;
  if (s == "sum") return Aggregation::sum;
  throw ConfigError("aggregate must be 'max' or 'sum', got '" + std::string(s) + "'");
}

struct RankedCandidate {
  EntityId entity;
  double score;           // aggregate path probability
  InstancePath best_path; // highest-probability supporting path
};

struct RankedCandidates {
  std::vector<RankedCandidate> items;
};

// Groups decoded paths by final entity and ranks the candidates. Pruned mode
// first discards every path whose metapath matches no rule body; candidates
// are restricted to finals of `target_type`. Aggregate score per entity is
// the maximum path probability (or the sum, for the ablation setting);
// descending, ties by entity id.
inline RankedCandidates rank_targets(const KnowledgeGraph& kg, const std::vector<BeamPath>& beams,
                                     const RuleSet& rules, RankingMode mode, TypeId target_type,
                                     Aggregation agg = Aggregation::max) {
  struct Group {
    double best_lp = -std::numeric_limits<double>::infinity();
    double sum_prob = 0.0;
    const InstancePath* best_path = nullptr;
  };
  std::map<EntityId, Group> groups;
  for (const BeamPath& bp : beams) {
    const EntityId final_entity = bp.path.entities.back();
    if (kg.entity_type(final_entity) != target_type) continue;
    if (mode == RankingMode::pruned) {
      const Metapath projected = metapath_of(kg, bp.path);
      bool matched = false;
      for (const Rule& r : rules.rules) {
        if (projected == r.body) {
          matched = true;
          break;
        }
      }
      if (!matched) continue;
    }
    Group& g = groups[final_entity];
    g.sum_prob += std::exp(bp.log_prob);
    if (bp.log_prob > g.best_lp) {
      g.best_lp = bp.log_prob;
      g.best_path = &bp.path;
    }
  }
  RankedCandidates out;
  out.items.reserve(groups.size());
  for (const auto& [entity, g] : groups) {
    const double score = agg == Aggregation::max ? std::exp(g.best_lp) : g.sum_prob;
    out.items.push_back(RankedCandidate{entity, score, *g.best_path});
  }
  std::sort(out.items.begin(), out.items.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  return out;
}

struct QueryRanking {
  Query query;
  RankedCandidates candidates;
};

struct QueryResult {
  Query query;
  std::size_t filtered_rank = 0;  // 1-based; 0 when the true target is absent
};

struct EvaluationReport {
  std::vector<QueryResult> per_query;
  double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0, mrr = 0.0;
  // run metadata, filled by the caller
  std::string mode;
  std::uint64_t seed = 0;
  std::string checkpoint_hash;
};

// Filtered link-prediction metrics: for each query, other known true
// diseases of the same compound are removed from the candidate list before
// the rank of the test disease is taken. A missing test disease contributes
// 0 to the MRR and to every hits@k.
inline EvaluationReport evaluate(const std::vector<QueryRanking>& rankings,
                                 const std::vector<Query>& truth,
                                 const std::set<std::pair<EntityId, EntityId>>& known_pairs) {
  std::set<std::pair<EntityId, EntityId>> truth_set;
  for (const Query& q : truth) truth_set.insert({q.source, q.target});
  std::map<std::pair<EntityId, EntityId>, const RankedCandidates*> by_query;
  for (const QueryRanking& qr : rankings) {
    const auto key = std::make_pair(qr.query.source, qr.query.target);
    if (!truth_set.count(key)) {
      throw QueryNotInTruth("ranking given for a query that is not in the test set");
    }
    by_query[key] = &qr.candidates;
  }
  EvaluationReport report;
  for (const Query& q : truth) {
    auto it = by_query.find({q.source, q.target});
    if (it == by_query.end()) {
      throw DataError("test query has no ranking");
    }
    std::size_t rank = 0, position = 0;
    for (const RankedCandidate& c : it->second->items) {
      if (c.entity != q.target && known_pairs.count({q.source, c.entity})) {
        continue;  // filtered: another known true disease of this compound
      }
      ++position;
      if (c.entity == q.target) {
        rank = position;
        break;
      }
    }
    report.per_query.push_back(QueryResult{q, rank});
    if (rank >= 1) {
      report.mrr += 1.0 / static_cast<double>(rank);
      if (rank <= 1) report.hits1 += 1.0;
      if (rank <= 3) report.hits3 += 1.0;
      if (rank <= 10) report.hits10 += 1.0;
    }
  }
  const double n = static_cast<double>(truth.size());
  if (n > 0) {
    report.hits1 /= n;
    report.hits3 /= n;
    report.hits10 /= n;
    report.mrr /= n;
  }
  return report;
}

}  // namespace kgr
