#pragma once

// Shared scaffolding for the test binaries: throwaway directories, tiny
// graph builders, and independently written reference routines used as
// oracles against the library implementations.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/policy.hpp"

namespace kgrtest {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("kgr-test-" + std::to_string(static_cast<long>(::getpid())) + "-" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream os(p, std::ios::binary);
    os << content;
    return p.string();
  }
};

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> split_lines_for_test(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

// Straight-line scalar reimplementation of the stacked recurrent cell, used
// as the forward-pass oracle. Works directly on the parameter matrices.
inline std::vector<Eigen::VectorXd> reference_hidden_sequence(
    const kgr::PolicyNetwork& net, const std::vector<kgr::VectorXd>& inputs) {
  const auto& params = net.params();
  const int h = net.config().hidden_size;
  const std::size_t layers = params.layers.size();
  std::vector<Eigen::VectorXd> hs(layers, Eigen::VectorXd::Zero(h));
  std::vector<Eigen::VectorXd> cs(layers, Eigen::VectorXd::Zero(h));
  std::vector<Eigen::VectorXd> tops;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (const auto& x0 : inputs) {
    Eigen::VectorXd x = x0;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& L = params.layers[l];
      Eigen::VectorXd h_new(h), c_new(h);
      for (int k = 0; k < h; ++k) {
        double zi = L.b(k, 0), zf = L.b(h + k, 0), zg = L.b(2 * h + k, 0), zo = L.b(3 * h + k, 0);
        for (int j = 0; j < x.size(); ++j) {
          zi += L.w_x(k, j) * x[j];
          zf += L.w_x(h + k, j) * x[j];
          zg += L.w_x(2 * h + k, j) * x[j];
          zo += L.w_x(3 * h + k, j) * x[j];
        }
        for (int j = 0; j < h; ++j) {
          zi += L.w_h(k, j) * hs[l][j];
          zf += L.w_h(h + k, j) * hs[l][j];
          zg += L.w_h(2 * h + k, j) * hs[l][j];
          zo += L.w_h(3 * h + k, j) * hs[l][j];
        }
        c_new[k] = sig(zf) * cs[l][k] + sig(zi) * std::tanh(zg);
        h_new[k] = sig(zo) * std::tanh(c_new[k]);
      }
      hs[l] = h_new;
      cs[l] = c_new;
      x = h_new;
    }
    tops.push_back(hs.back());
  }
  return tops;
}

// The encoder inputs a rollout would build: [r_prev; e_cur; e_src], zeros in
// the first two blocks before any transition.
inline kgr::VectorXd encoder_input(const kgr::PolicyNetwork& net, kgr::EntityId source,
                                   kgr::EntityId current, std::optional<kgr::RelationId> prev) {
  const int d = net.config().embed_dim;
  kgr::VectorXd x = kgr::VectorXd::Zero(3 * d);
  if (prev) {
    x.head(d) = net.params().relation_embed.row(*prev).transpose();
    x.segment(d, d) = net.params().entity_embed.row(current).transpose();
  }
  x.tail(d) = net.params().entity_embed.row(source).transpose();
  return x;
}

struct ScoredPath {
  kgr::InstancePath path;
  double log_prob = 0.0;
};

namespace detail {
inline void enumerate_rec(const kgr::KnowledgeGraph& kg, const kgr::PolicyNetwork& net,
                          const kgr::AgentState& state, kgr::InstancePath& prefix, double log_prob,
                          int remaining, const std::optional<kgr::Triple>& mask,
                          std::vector<ScoredPath>& out) {
  if (remaining == 0) {
    out.push_back(ScoredPath{prefix, log_prob});
    return;
  }
  kgr::AgentState enc = net.encode_history(state);
  auto dist = net.action_distribution(net.hidden_top(enc), kg.available_actions(enc.current, mask));
  for (std::size_t j = 0; j < dist.actions.size(); ++j) {
    const kgr::Action& a = dist.actions[j];
    prefix.rels.push_back(a.rel);
    prefix.entities.push_back(a.target);
    enumerate_rec(kg, net, kgr::apply_action(enc, a), prefix,
                  log_prob + dist.log_probs[static_cast<Eigen::Index>(j)], remaining - 1, mask,
                  out);
    prefix.rels.pop_back();
    prefix.entities.pop_back();
  }
}
}  // namespace detail

// Exhaustive enumeration of every length-T walk with its exact policy log
// probability; the beam-search oracle.
inline std::vector<ScoredPath> enumerate_all_paths(const kgr::KnowledgeGraph& kg,
                                                   const kgr::PolicyNetwork& net,
                                                   kgr::EntityId source, int steps,
                                                   std::optional<kgr::Triple> mask = std::nullopt) {
  std::vector<ScoredPath> out;
  kgr::InstancePath prefix{{source}, {}};
  detail::enumerate_rec(kg, net, net.initial_state(source), prefix, 0.0, steps, mask, out);
  return out;
}

}  // namespace kgrtest
