#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgr/errors.hpp"
#include "kgr/hash.hpp"

namespace kgr {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TypeId = std::int32_t;

// Bijective name <-> dense id maps for entities, relations, and types.
// Names are case-sensitive exact strings. After inverse augmentation the
// relation table is [r_0..r_{k-1}, r_0^-1..r_{k-1}^-1], so the inverse of a
// relation id is derivable by offset.
class Vocabulary {
 public:
  EntityId intern_entity(std::string_view name) { return intern(name, entity_names_, entity_ids_); }
  RelationId intern_relation(std::string_view name) {
    return intern(name, relation_names_, relation_ids_);
  }
  TypeId intern_type(std::string_view name) { return intern(name, type_names_, type_ids_); }

  std::optional<EntityId> entity_id(std::string_view name) const {
    return lookup(name, entity_ids_);
  }
  std::optional<RelationId> relation_id(std::string_view name) const {
    return lookup(name, relation_ids_);
  }
  std::optional<TypeId> type_id(std::string_view name) const { return lookup(name, type_ids_); }

  const std::string& entity_name(EntityId id) const { return entity_names_.at(static_cast<std::size_t>(id)); }
  const std::string& relation_name(RelationId id) const {
    return relation_names_.at(static_cast<std::size_t>(id));
  }
  const std::string& type_name(TypeId id) const { return type_names_.at(static_cast<std::size_t>(id)); }

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }
  std::size_t type_count() const { return type_names_.size(); }

  // Appends an inverse relation "<name>^-1" for each existing relation.
  // Called exactly once, by KnowledgeGraph::add_inverse_relations.
  void append_inverse_relations() {
    if (base_relation_count_ != 0) throw AlreadyAugmented("relation vocabulary already augmented");
    base_relation_count_ = relation_names_.size();
    for (std::size_t r = 0; r < base_relation_count_; ++r) {
      intern_relation(relation_names_[r] + "^-1");
    }
  }

  bool has_inverses() const { return base_relation_count_ != 0; }

  RelationId inverse_relation(RelationId r) const {
    if (!has_inverses()) throw LogicError("inverse_relation before augmentation");
    const auto base = static_cast<RelationId>(base_relation_count_);
    return r < base ? r + base : r - base;
  }

  bool is_inverse(RelationId r) const {
    return has_inverses() && r >= static_cast<RelationId>(base_relation_count_);
  }

  // Fingerprint over all three name tables in id order; stored in checkpoints
  // so that a model cannot be silently applied to a different graph.
  std::uint64_t fingerprint() const {
    Fnv1a h;
    for (const auto& n : entity_names_) {
      h.update(n);
      h.update_byte(0x1f);
    }
    h.update_byte(0x1e);
    for (const auto& n : relation_names_) {
      h.update(n);
      h.update_byte(0x1f);
    }
    h.update_byte(0x1e);
    for (const auto& n : type_names_) {
      h.update(n);
      h.update_byte(0x1f);
    }
    return h.digest();
  }

 private:
  template <typename Id>
  static Id intern(std::string_view name, std::vector<std::string>& names,
                   std::unordered_map<std::string, Id>& ids) {
    auto it = ids.find(std::string(name));
    if (it != ids.end()) return it->second;
    Id id = static_cast<Id>(names.size());
    names.emplace_back(name);
    ids.emplace(names.back(), id);
    return id;
  }

  template <typename Id>
  static std::optional<Id> lookup(std::string_view name,
                                  const std::unordered_map<std::string, Id>& ids) {
    auto it = ids.find(std::string(name));
    if (it == ids.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> entity_names_, relation_names_, type_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::unordered_map<std::string, TypeId> type_ids_;
  std::size_t base_relation_count_ = 0;
};

}  // namespace kgr
