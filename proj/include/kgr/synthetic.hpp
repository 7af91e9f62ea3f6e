#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgr/config.hpp"
#include "kgr/graph.hpp"
#include "kgr/hash.hpp"
#include "kgr/rng.hpp"
#include "kgr/rules.hpp"

namespace kgr {

// One relation family in the synthetic schema: every entity of source_type
// gets out_degree random edges to entities of target_type.
struct RelationSpec {
  std::string name;
  std::string source_type;
  std::string target_type;
  int out_degree = 2;
};

struct SyntheticGraphConfig {
  std::vector<std::pair<std::string, int>> type_counts;  // declared order fixes type ids
  std::vector<RelationSpec> relations;                   // noise schema, order fixes relation ids

  // Planted rule: body_types has one more entry than body_relations; every
  // (compound, disease) pair connected by a body instance gets a head edge
  // with probability generation_probability.
  std::vector<std::string> body_types;
  std::vector<std::string> body_relations;
  std::string head_relation = "treats";
  double generation_probability = 0.85;
  int max_path_length = 3;
  std::uint64_t seed = 0;

  // ~300 entities, 6 noise relations, one length-3 body ending at Disease.
  static SyntheticGraphConfig defaults() {
    SyntheticGraphConfig c;
    c.type_counts = {{"Compound", 70}, {"Gene", 90}, {"Disease", 35},
                     {"Anatomy", 50},  {"SideEffect", 55}};
    c.relations = {{"interacts", "Compound", "Compound", 3},
                   {"binds", "Compound", "Gene", 3},
                   {"associates", "Gene", "Disease", 2},
                   {"expresses", "Anatomy", "Gene", 2},
                   {"causes", "Compound", "SideEffect", 2},
                   {"localizes", "Disease", "Anatomy", 2}};
    c.body_types = {"Compound", "Compound", "Gene", "Disease"};
    c.body_relations = {"interacts", "binds", "associates"};
    return c;
  }

  void validate() const {
    if (type_counts.empty()) throw InfeasibleConfig("no entity types declared");
    std::set<std::string> seen_types;
    for (const auto& [name, count] : type_counts) {
      if (name.empty()) throw InfeasibleConfig("empty type name");
      if (count < 0) throw InfeasibleConfig("negative entity count for type " + name);
      if (!seen_types.insert(name).second) throw InfeasibleConfig("duplicate type " + name);
    }
    std::set<std::string> seen_rels;
    for (const auto& spec : relations) {
      if (spec.name.empty()) throw InfeasibleConfig("empty relation name");
      if (!seen_rels.insert(spec.name).second) {
        throw InfeasibleConfig("duplicate relation " + spec.name);
      }
      if (!seen_types.count(spec.source_type) || !seen_types.count(spec.target_type)) {
        throw InfeasibleConfig("relation " + spec.name + " references an undeclared type");
      }
      if (spec.out_degree < 0) throw InfeasibleConfig("negative out-degree for " + spec.name);
    }
    if (seen_rels.count(head_relation)) {
      throw InfeasibleConfig("head relation " + head_relation + " collides with the noise schema");
    }
    if (body_types.size() != body_relations.size() + 1 || body_relations.empty()) {
      throw InfeasibleConfig("planted body must alternate L+1 types with L >= 1 relations");
    }
    if (body_relations.size() > static_cast<std::size_t>(max_path_length)) {
      throw InfeasibleConfig("planted body longer than the maximum path length");
    }
    for (const auto& t : body_types) {
      auto it = std::find_if(type_counts.begin(), type_counts.end(),
                             [&](const auto& p) { return p.first == t; });
      if (it == type_counts.end() || it->second == 0) {
        throw InfeasibleConfig("planted body references type " + t + " with zero entities");
      }
    }
    for (std::size_t i = 0; i < body_relations.size(); ++i) {
      auto it = std::find_if(relations.begin(), relations.end(),
                             [&](const RelationSpec& s) { return s.name == body_relations[i]; });
      if (it == relations.end()) {
        throw InfeasibleConfig("planted body uses relation " + body_relations[i] +
                               " absent from the schema");
      }
      if (it->source_type != body_types[i] || it->target_type != body_types[i + 1]) {
        throw InfeasibleConfig("planted body types disagree with the schema for relation " +
                               body_relations[i]);
      }
    }
    if (generation_probability < 0.0 || generation_probability > 1.0) {
      throw InfeasibleConfig("generation probability outside [0, 1]");
    }
    if (max_path_length < 1) throw InfeasibleConfig("max path length must be >= 1");
  }
};

struct SyntheticGraph {
  KnowledgeGraph kg;  // not yet inverse-augmented
  std::vector<std::pair<EntityId, EntityId>> planted_pairs;  // head edges, sorted
  Rule planted_rule;            // score = exact enumerated confidence
  std::size_t body_path_count = 0;       // all body instance paths
  std::size_t supported_path_count = 0;  // those whose endpoints got a head edge
};

namespace detail {

inline std::string synthetic_entity_name(const std::string& type, int index) {
  return type + "_" + std::to_string(index);
}

}  // namespace detail

// Builds a typed random graph, enumerates every instance path of the planted
// body, and adds the head edge for each connected (source, target) pair with
// the configured probability. The planted rule's score is the exact per-path
// confidence of the resulting graph, so downstream estimators can be checked
// against the generator's own construction. Same seed, same bytes.
inline SyntheticGraph generate_synthetic(const SyntheticGraphConfig& cfg) {
  cfg.validate();

  std::vector<std::array<std::string, 2>> type_rows;
  for (const auto& [type, count] : cfg.type_counts) {
    for (int i = 0; i < count; ++i) {
      type_rows.push_back({detail::synthetic_entity_name(type, i), type});
    }
  }

  std::map<std::string, std::vector<std::string>> members;
  for (const auto& row : type_rows) members[row[1]].push_back(row[0]);

  // Noise edges: per relation, per source, out_degree draws with rejection of
  // self-loops and duplicates (bounded retries keep generation total).
  Rng edge_rng(derive_seed(cfg.seed, fnv1a("synthetic-edges"), 0, 0));
  std::set<std::array<std::string, 3>> edge_set;
  for (const auto& spec : cfg.relations) {
    const auto& sources = members[spec.source_type];
    const auto& targets = members[spec.target_type];
    if (targets.empty()) continue;
    for (const auto& src : sources) {
      for (int k = 0; k < spec.out_degree; ++k) {
        for (int attempt = 0; attempt < 64; ++attempt) {
          const auto& dst = targets[edge_rng.uniform_index(targets.size())];
          if (dst == src) continue;
          if (edge_set.insert({src, spec.name, dst}).second) break;
        }
      }
    }
  }
  if (edge_set.empty()) throw InfeasibleConfig("schema generated no edges");

  // Interim graph without head edges, used to enumerate body instances.
  std::vector<std::array<std::string, 3>> triple_rows(edge_set.begin(), edge_set.end());
  KnowledgeGraph base = KnowledgeGraph::build(triple_rows, type_rows);

  std::vector<RelationId> body_rels;
  for (const auto& r : cfg.body_relations) body_rels.push_back(*base.vocab().relation_id(r));

  // Exhaustive DFS over the body metapath; counts paths per endpoint pair.
  std::map<std::pair<EntityId, EntityId>, std::size_t> paths_per_pair;
  std::size_t total_paths = 0;
  const TypeId source_type = *base.vocab().type_id(cfg.body_types.front());
  for (EntityId e = 0; e < static_cast<EntityId>(base.entity_count()); ++e) {
    if (base.entity_type(e) != source_type) continue;
    std::vector<std::pair<EntityId, std::size_t>> stack{{e, 0}};
    while (!stack.empty()) {
      auto [cur, depth] = stack.back();
      stack.pop_back();
      if (depth == body_rels.size()) {
        paths_per_pair[{e, cur}]++;
        ++total_paths;
        continue;
      }
      for (const auto& edge : base.out_edges(cur)) {
        if (edge.rel == body_rels[depth]) stack.push_back({edge.tail, depth + 1});
      }
    }
  }
  if (total_paths == 0) {
    throw InfeasibleConfig("planted body has no instance paths under this schema");
  }

  // Head-edge planting, pair-wise Bernoulli in sorted pair order.
  Rng plant_rng(derive_seed(cfg.seed, fnv1a("synthetic-plant"), 0, 0));
  SyntheticGraph out;
  std::size_t supported = 0;
  for (const auto& [pair, count] : paths_per_pair) {
    if (plant_rng.bernoulli(cfg.generation_probability)) {
      out.planted_pairs.push_back(pair);
      supported += count;
      triple_rows.push_back({base.vocab().entity_name(pair.first), cfg.head_relation,
                             base.vocab().entity_name(pair.second)});
    }
  }

  out.kg = KnowledgeGraph::build(triple_rows, type_rows);
  out.body_path_count = total_paths;
  out.supported_path_count = supported;

  const Vocabulary& vocab = out.kg.vocab();
  Rule rule;
  rule.head_source = *vocab.type_id(cfg.body_types.front());
  rule.head_relation = *vocab.relation_id(cfg.head_relation);
  rule.head_target = *vocab.type_id(cfg.body_types.back());
  for (const auto& t : cfg.body_types) rule.body.types.push_back(*vocab.type_id(t));
  for (const auto& r : cfg.body_relations) rule.body.rels.push_back(*vocab.relation_id(r));
  rule.score = static_cast<double>(supported) / static_cast<double>(total_paths);
  out.planted_rule = rule;
  return out;
}

// Flat key = value description of a generator setup. Omitted keys keep the
// default value. Grammar:
//   types      = Name:count ...
//   relations  = name:SourceType:TargetType:out_degree ...
//   body       = Type0 -[rel1]-> Type1 ... (same arrow syntax as rule files)
//   head_relation, generation_probability, max_path_length, seed = scalars
inline SyntheticGraphConfig parse_synthetic_config(KeyValueConfig& kv) {
  SyntheticGraphConfig c = SyntheticGraphConfig::defaults();
  if (std::string s = kv.get_string("types", ""); !s.empty()) {
    c.type_counts.clear();
    for (auto tok : split_ws(s)) {
      auto parts = split(tok, ':');
      if (parts.size() != 2) throw ConfigError("types entries must be Name:count, got '" +
                                               std::string(tok) + "'");
      c.type_counts.emplace_back(std::string(parts[0]),
                                 static_cast<int>(parse_long(parts[1], "type count")));
    }
  }
  if (std::string s = kv.get_string("relations", ""); !s.empty()) {
    c.relations.clear();
    for (auto tok : split_ws(s)) {
      auto parts = split(tok, ':');
      if (parts.size() != 4) {
        throw ConfigError("relations entries must be name:Source:Target:out_degree, got '" +
                          std::string(tok) + "'");
      }
      c.relations.push_back(RelationSpec{std::string(parts[0]), std::string(parts[1]),
                                         std::string(parts[2]),
                                         static_cast<int>(parse_long(parts[3], "out-degree"))});
    }
  }
  if (std::string s = kv.get_string("body", ""); !s.empty()) {
    c.body_types.clear();
    c.body_relations.clear();
    auto toks = split_ws(s);
    if (toks.size() < 3 || toks.size() % 2 == 0) {
      throw ConfigError("body must alternate types and -[relation]-> arrows");
    }
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i % 2 == 0) {
        c.body_types.emplace_back(toks[i]);
      } else {
        auto t = toks[i];
        if (t.size() < 6 || t.substr(0, 2) != "-[" || t.substr(t.size() - 3) != "]->") {
          throw ConfigError("malformed arrow token '" + std::string(t) + "'");
        }
        c.body_relations.emplace_back(t.substr(2, t.size() - 5));
      }
    }
  }
  c.head_relation = kv.get_string("head_relation", c.head_relation);
  c.generation_probability = kv.get_double("generation_probability", c.generation_probability);
  c.max_path_length = static_cast<int>(kv.get_long("max_path_length", c.max_path_length));
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(c.seed)));
  kv.reject_unknown_keys();
  c.validate();
  return c;
}

// The generator's rule as a one-element set, ready for reward shaping or
// serialization next to the generated graph files.
inline RuleSet planted_rule_set(const SyntheticGraph& sg) {
  RuleSet set;
  set.head_source = sg.planted_rule.head_source;
  set.head_relation = sg.planted_rule.head_relation;
  set.head_target = sg.planted_rule.head_target;
  set.rules.push_back(sg.planted_rule);
  return set;
}

}  // namespace kgr
