#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/io.hpp"
#include "kgr/rng.hpp"

namespace kgr {

// Alternating type/relation skeleton of an instance path:
// type_0 -[rel_1]-> type_1 ... -[rel_L]-> type_L, L >= 0.
struct Metapath {
  std::vector<TypeId> types;      // length L+1
  std::vector<RelationId> rels;   // length L

  std::size_t length() const { return rels.size(); }

  friend bool operator==(const Metapath&, const Metapath&) = default;
};

// Horn-style rule: head triple pattern implied by a body metapath.
struct Rule {
  TypeId head_source;       // e.g. Compound
  RelationId head_relation; // e.g. treats
  TypeId head_target;       // e.g. Disease
  Metapath body;
  double score = 0.0;       // quality S(M) in [0, 1]
};

// Ordered collection of rules sharing one head; bodies pairwise distinct.
struct RuleSet {
  TypeId head_source = -1;
  RelationId head_relation = -1;
  TypeId head_target = -1;
  std::vector<Rule> rules;

  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }
  std::size_t max_body_length() const {
    std::size_t m = 0;
    for (const Rule& r : rules) m = std::max(m, r.body.length());
    return m;
  }
};

// A concrete walk through the graph. STAY steps are stored with the graph's
// reserved stay relation id and target == previous entity.
struct InstancePath {
  std::vector<EntityId> entities;   // length T+1
  std::vector<RelationId> rels;     // length T
};

// Projects an instance path onto its metapath. STAY steps are deleted before
// projection so that rules shorter than the rollout length can still fire.
inline Metapath metapath_of(const KnowledgeGraph& kg, const InstancePath& path) {
  if (path.entities.empty() || path.entities.size() != path.rels.size() + 1) {
    throw InvalidPath("instance path has inconsistent lengths");
  }
  const RelationId stay = kg.stay_relation();
  Metapath m;
  m.types.push_back(kg.entity_type(path.entities[0]));
  for (std::size_t i = 0; i < path.rels.size(); ++i) {
    const EntityId from = path.entities[i];
    const EntityId to = path.entities[i + 1];
    const RelationId r = path.rels[i];
    if (r == stay) {
      if (to != from) throw InvalidPath("STAY step must remain at the current node");
      continue;
    }
    if (!kg.has_edge(from, r, to)) {
      throw InvalidPath("edge (" + kg.vocab().entity_name(from) + ", " +
                        kg.vocab().relation_name(r) + ", " + kg.vocab().entity_name(to) +
                        ") not in graph");
    }
    m.rels.push_back(r);
    m.types.push_back(kg.entity_type(to));
  }
  return m;
}

// Exact-match indicator 1{P~ = M}: same length, same types, same relations.
inline bool matches(const KnowledgeGraph& kg, const InstancePath& path, const Rule& rule) {
  return metapath_of(kg, path) == rule.body;
}

inline std::string format_metapath(const Vocabulary& vocab, const Metapath& m) {
  std::string out = vocab.type_name(m.types[0]);
  for (std::size_t i = 0; i < m.rels.size(); ++i) {
    out += " -[" + vocab.relation_name(m.rels[i]) + "]-> ";
    out += vocab.type_name(m.types[i + 1]);
  }
  return out;
}

inline std::string format_instance_path(const KnowledgeGraph& kg, const InstancePath& p) {
  std::string out = kg.vocab().entity_name(p.entities[0]);
  for (std::size_t i = 0; i < p.rels.size(); ++i) {
    const std::string rel =
        p.rels[i] == kg.stay_relation() ? "stay" : kg.vocab().relation_name(p.rels[i]);
    out += " -[" + rel + "]-> " + kg.vocab().entity_name(p.entities[i + 1]);
  }
  return out;
}

namespace detail {

// Resolves a relation token, where inverse relations are written `name^-1`.
inline RelationId parse_relation_token(const Vocabulary& vocab, std::string_view tok,
                                       const std::string& where) {
  auto id = vocab.relation_id(tok);
  if (!id) throw MalformedRule(where + ": unknown relation '" + std::string(tok) + "'");
  return *id;
}

inline TypeId parse_type_token(const Vocabulary& vocab, std::string_view tok,
                               const std::string& where) {
  auto id = vocab.type_id(tok);
  if (!id) throw MalformedRule(where + ": unknown type '" + std::string(tok) + "'");
  return *id;
}

}  // namespace detail

// Rule file format:
//   # comment
//   HEAD <SourceType> <relation> <TargetType>
//   SCORE=<float> <Type0> -[<rel>]-> <Type1> -[<rel>]-> ... <TypeL>
// Inverse relations are written `<rel>^-1`.
inline RuleSet parse_rules(const std::vector<std::string>& lines, const Vocabulary& vocab,
                           const std::string& source_name = "<rules>") {
  RuleSet set;
  bool head_seen = false;
  std::size_t lineno = 0;
  for (const std::string& raw : lines) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!head_seen) {
      auto toks = split(line, ' ');
      std::erase_if(toks, [](std::string_view t) { return t.empty(); });
      if (toks.size() != 4 || toks[0] != "HEAD") {
        throw MalformedRule(where + ": expected 'HEAD <SourceType> <relation> <TargetType>'");
      }
      set.head_source = detail::parse_type_token(vocab, toks[1], where);
      set.head_relation = detail::parse_relation_token(vocab, toks[2], where);
      set.head_target = detail::parse_type_token(vocab, toks[3], where);
      head_seen = true;
      continue;
    }
    auto toks = split(line, ' ');
    std::erase_if(toks, [](std::string_view t) { return t.empty(); });
    if (toks.empty() || !toks[0].starts_with("SCORE=")) {
      throw MalformedRule(where + ": rule line must start with SCORE=<float>");
    }
    Rule rule;
    rule.head_source = set.head_source;
    rule.head_relation = set.head_relation;
    rule.head_target = set.head_target;
    rule.score = parse_double(toks[0].substr(6), where);
    if (rule.score < 0.0 || rule.score > 1.0) {
      throw ScoreOutOfRange(where + ": score " + format_double(rule.score) +
                            " outside [0, 1]");
    }
    if (toks.size() < 2) throw MalformedRule(where + ": empty rule body");
    // body tokens alternate: Type, -[rel]->, Type, -[rel]->, ..., Type
    bool expect_type = true;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      std::string_view tok = toks[i];
      if (expect_type) {
        rule.body.types.push_back(detail::parse_type_token(vocab, tok, where));
      } else {
        if (!tok.starts_with("-[") || !tok.ends_with("]->")) {
          throw MalformedRule(where + ": expected '-[<rel>]->', got '" + std::string(tok) + "'");
        }
        tok = tok.substr(2, tok.size() - 5);
        rule.body.rels.push_back(detail::parse_relation_token(vocab, tok, where));
      }
      expect_type = !expect_type;
    }
    if (expect_type) throw MalformedRule(where + ": body ends with a relation");
    if (rule.body.types.front() != set.head_source || rule.body.types.back() != set.head_target) {
      throw MalformedRule(where + ": body must start at the head source type and end at the head target type");
    }
    for (const Rule& other : set.rules) {
      if (other.body == rule.body) throw MalformedRule(where + ": duplicate rule body");
    }
    set.rules.push_back(std::move(rule));
  }
  if (!head_seen) throw MalformedRule(source_name + ": missing HEAD line");
  return set;
}

inline RuleSet parse_rules_file(const std::string& path, const Vocabulary& vocab) {
  return parse_rules(read_lines(path), vocab, path);
}

inline std::string serialize_rules(const RuleSet& set, const Vocabulary& vocab) {
  std::string out = "HEAD " + vocab.type_name(set.head_source) + " " +
                    vocab.relation_name(set.head_relation) + " " +
                    vocab.type_name(set.head_target) + "\n";
  for (const Rule& r : set.rules) {
    out += "SCORE=" + format_double(r.score) + " " + format_metapath(vocab, r.body) + "\n";
  }
  return out;
}

// Monte-Carlo confidence: fraction of sampled body-matching paths whose
// endpoints carry an observed head-relation edge. The source is drawn
// uniformly from sources with at least one full body continuation; each hop
// extends uniformly over type/relation-compatible edges, and prefixes that
// dead-end are rejected and resampled from a fresh source.
inline double estimate_confidence(const KnowledgeGraph& kg, const Rule& rule,
                                  std::size_t n_samples, std::uint64_t seed) {
  const Metapath& body = rule.body;
  const std::size_t hops = body.length();
  // Backward reachability: viable[i] = entities of type_i that can complete
  // the remaining body suffix. Determines the realizable source set.
  std::vector<std::vector<char>> viable(hops + 1,
                                        std::vector<char>(kg.entity_count(), 0));
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    viable[hops][e] = kg.entity_type(static_cast<EntityId>(e)) == body.types[hops];
  }
  for (std::size_t i = hops; i-- > 0;) {
    for (std::size_t e = 0; e < kg.entity_count(); ++e) {
      if (kg.entity_type(static_cast<EntityId>(e)) != body.types[i]) continue;
      for (const auto& edge : kg.out_edges(static_cast<EntityId>(e))) {
        if (edge.rel == body.rels[i] && viable[i + 1][static_cast<std::size_t>(edge.tail)]) {
          viable[i][e] = 1;
          break;
        }
      }
    }
  }
  std::vector<EntityId> sources;
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    if (viable[0][e]) sources.push_back(static_cast<EntityId>(e));
  }
  if (sources.empty()) {
    throw UnrealizableBody("no instance path matches the rule body");
  }

  Rng rng(seed);
  std::size_t accepted = 0, supported = 0;
  std::vector<EntityId> candidates;
  while (accepted < n_samples) {
    EntityId cur = sources[rng.uniform_index(sources.size())];
    const EntityId source = cur;
    bool complete = true;
    for (std::size_t i = 0; i < hops; ++i) {
      candidates.clear();
      for (const auto& edge : kg.out_edges(cur)) {
        if (edge.rel == body.rels[i] && kg.entity_type(edge.tail) == body.types[i + 1]) {
          candidates.push_back(edge.tail);
        }
      }
      if (candidates.empty()) {
        complete = false;  // dead prefix; resample
        break;
      }
      cur = candidates[rng.uniform_index(candidates.size())];
    }
    if (!complete) continue;
    ++accepted;
    if (kg.has_edge(source, rule.head_relation, cur)) ++supported;
  }
  return static_cast<double>(supported) / static_cast<double>(n_samples);
}

}  // namespace kgr
