#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgr/errors.hpp"
#include "kgr/io.hpp"
#include "kgr/vocab.hpp"

namespace kgr {

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// One admissible transition: follow `rel` to `target`. STAY is encoded as a
// reserved relation id (one past the relation vocabulary) with target = the
// current node, so downstream code embeds and scores it like any other edge.
struct Action {
  RelationId rel;
  EntityId target;

  friend bool operator==(const Action&, const Action&) = default;
};

struct GraphStats {
  std::size_t entities = 0;
  std::size_t edges = 0;
  std::size_t relations = 0;
  std::size_t types = 0;
  std::map<std::string, std::size_t> entities_per_type;
  std::map<std::string, std::size_t> edges_per_relation;
  std::size_t treats_edges = 0;  // base relation only, inverses not counted
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t duplicates_dropped = 0;
};

// Typed directed multigraph over dense ids. Immutable once built (the inverse
// augmentation happens in the single-owner build phase); concurrent readers
// are safe.
class KnowledgeGraph {
 public:
  struct Edge {
    RelationId rel;
    EntityId tail;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
  };

  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  std::size_t entity_count() const { return vocab_.entity_count(); }
  std::size_t relation_count() const { return vocab_.relation_count(); }
  std::size_t edge_count() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  bool augmented() const { return augmented_; }
  const LoadStats& load_stats() const { return load_stats_; }

  RelationId stay_relation() const { return static_cast<RelationId>(vocab_.relation_count()); }

  bool is_stay(const Action& a) const { return a.rel == stay_relation(); }

  TypeId entity_type(EntityId e) const {
    check_entity(e);
    return types_[static_cast<std::size_t>(e)];
  }

  std::span<const Edge> out_edges(EntityId e) const {
    check_entity(e);
    const auto b = offsets_[static_cast<std::size_t>(e)];
    const auto n = offsets_[static_cast<std::size_t>(e) + 1] - b;
    return {edges_.data() + b, n};
  }

  bool has_edge(EntityId h, RelationId r, EntityId t) const {
    auto row = out_edges(h);
    return std::binary_search(row.begin(), row.end(), Edge{r, t});
  }

  // All outgoing edges plus STAY, minus the masked edge (and its inverse,
  // when inverses exist). Sorted by (relation, target), STAY last.
  std::vector<Action> available_actions(EntityId current,
                                        std::optional<Triple> mask = std::nullopt) const {
    check_entity(current);
    std::optional<Edge> skip_fwd, skip_bwd;
    if (mask) {
      if (mask->head == current) skip_fwd = Edge{mask->rel, mask->tail};
      if (vocab_.has_inverses() && mask->tail == current) {
        skip_bwd = Edge{vocab_.inverse_relation(mask->rel), mask->head};
      }
    }
    std::vector<Action> actions;
    auto row = out_edges(current);
    actions.reserve(row.size() + 1);
    for (const Edge& e : row) {
      if ((skip_fwd && e == *skip_fwd) || (skip_bwd && e == *skip_bwd)) continue;
      actions.push_back(Action{e.rel, e.tail});
    }
    actions.push_back(Action{stay_relation(), current});
    return actions;
  }

  // Doubles the edge set with (t, r^-1, h) counterparts and the relation
  // vocabulary with the inverse labels. One-shot; guarded by a flag.
  void add_inverse_relations() {
    if (augmented_) throw AlreadyAugmented("graph already contains inverse relations");
    vocab_.append_inverse_relations();
    std::vector<Triple> doubled;
    doubled.reserve(triples_.size() * 2);
    for (const Triple& t : triples_) {
      doubled.push_back(t);
      doubled.push_back(Triple{t.tail, vocab_.inverse_relation(t.rel), t.head});
    }
    triples_ = std::move(doubled);
    augmented_ = true;
    rebuild_index();
  }

  GraphStats stats(const std::string& head_relation = "treats") const {
    GraphStats s;
    s.entities = vocab_.entity_count();
    s.edges = triples_.size();
    s.relations = vocab_.relation_count();
    s.types = vocab_.type_count();
    for (std::size_t e = 0; e < types_.size(); ++e) {
      s.entities_per_type[vocab_.type_name(types_[e])]++;
    }
    for (const Triple& t : triples_) {
      s.edges_per_relation[vocab_.relation_name(t.rel)]++;
    }
    auto it = s.edges_per_relation.find(head_relation);
    s.treats_edges = it == s.edges_per_relation.end() ? 0 : it->second;
    return s;
  }

  // Build from parsed rows. Used by the loader and the synthetic generator.
  static KnowledgeGraph build(const std::vector<std::array<std::string, 3>>& triple_rows,
                              const std::vector<std::array<std::string, 2>>& type_rows) {
    if (triple_rows.empty()) throw EmptyInput("no triples given");
    KnowledgeGraph kg;
    for (const auto& row : type_rows) {
      EntityId e = kg.vocab_.intern_entity(row[0]);
      TypeId ty = kg.vocab_.intern_type(row[1]);
      if (static_cast<std::size_t>(e) >= kg.types_.size()) {
        kg.types_.resize(static_cast<std::size_t>(e) + 1, -1);
      }
      TypeId& slot = kg.types_[static_cast<std::size_t>(e)];
      if (slot != -1 && slot != ty) {
        throw MalformedRow("entity '" + row[0] + "' mapped to more than one type");
      }
      slot = ty;
    }
    for (const auto& row : triple_rows) {
      auto h = kg.vocab_.entity_id(row[0]);
      auto t = kg.vocab_.entity_id(row[2]);
      if (!h) throw MissingTypeMapping("entity '" + row[0] + "' has no type mapping");
      if (!t) throw MissingTypeMapping("entity '" + row[2] + "' has no type mapping");
      RelationId r = kg.vocab_.intern_relation(row[1]);
      kg.triples_.push_back(Triple{*h, r, *t});
    }
    kg.load_stats_.rows = kg.triples_.size();
    std::sort(kg.triples_.begin(), kg.triples_.end());
    auto last = std::unique(kg.triples_.begin(), kg.triples_.end());
    kg.load_stats_.duplicates_dropped =
        static_cast<std::size_t>(std::distance(last, kg.triples_.end()));
    kg.triples_.erase(last, kg.triples_.end());
    kg.rebuild_index();
    return kg;
  }

 private:
  void check_entity(EntityId e) const {
    if (e < 0 || static_cast<std::size_t>(e) >= vocab_.entity_count()) {
      throw UnknownEntity("unknown entity id " + std::to_string(e));
    }
  }

  void rebuild_index() {
    std::sort(triples_.begin(), triples_.end());
    const std::size_t n = vocab_.entity_count();
    offsets_.assign(n + 1, 0);
    edges_.clear();
    edges_.reserve(triples_.size());
    for (const Triple& t : triples_) offsets_[static_cast<std::size_t>(t.head) + 1]++;
    for (std::size_t i = 1; i <= n; ++i) offsets_[i] += offsets_[i - 1];
    for (const Triple& t : triples_) edges_.push_back(Edge{t.rel, t.tail});
  }

  Vocabulary vocab_;
  std::vector<Triple> triples_;       // sorted by (head, rel, tail)
  std::vector<TypeId> types_;         // entity id -> type id
  std::vector<std::size_t> offsets_;  // CSR offsets into edges_
  std::vector<Edge> edges_;           // sorted within each row by (rel, tail)
  bool augmented_ = false;
  LoadStats load_stats_;
};

// Reads tab-separated `head<TAB>relation<TAB>tail` and `entity<TAB>type`
// files (UTF-8, no header) into a graph.
inline KnowledgeGraph load_graph(const std::string& triples_path, const std::string& types_path) {
  std::vector<std::array<std::string, 3>> triple_rows;
  std::size_t lineno = 0;
  for (const std::string& line : read_lines(triples_path)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw MalformedRow(triples_path + ":" + std::to_string(lineno) + ": expected 3 columns, got " +
                         std::to_string(cols.size()));
    }
    triple_rows.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2])});
  }
  std::vector<std::array<std::string, 2>> type_rows;
  lineno = 0;
  for (const std::string& line : read_lines(types_path)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2) {
      throw MalformedRow(types_path + ":" + std::to_string(lineno) + ": expected 2 columns, got " +
                         std::to_string(cols.size()));
    }
    type_rows.push_back({std::string(cols[0]), std::string(cols[1])});
  }
  if (triple_rows.empty()) throw EmptyInput("no triples in " + triples_path);
  return KnowledgeGraph::build(triple_rows, type_rows);
}

}  // namespace kgr
