#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cogkr {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

// One outgoing edge as seen from its source entity.
struct Edge {
  RelationId relation = 0;
  EntityId target = 0;
  auto operator<=>(const Edge&) const = default;
};

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;
  auto operator<=>(const Triple&) const = default;
};

struct EntityPair {
  EntityId head = 0;
  EntityId tail = 0;
  auto operator<=>(const EntityPair&) const = default;
};

// Dense string <-> id map; ids follow first appearance.
class Vocabulary {
 public:
  std::uint32_t get_or_add(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Immutable, inverse-augmented adjacency over typed directed edges.
//
// Base relations take ids [0, R); the inverse of r is r + R. Adjacency of
// each entity is duplicate-free and sorted by (relation, target).
class KnowledgeGraph {
 public:
  class Builder;

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_base_relations() const { return relations_.size(); }
  std::size_t num_relations() const { return 2 * relations_.size(); }
  std::size_t triple_count() const { return triple_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t duplicates_dropped() const { return duplicates_; }

  RelationId inverse(RelationId r) const;
  bool is_inverse(RelationId r) const { return r >= relations_.size(); }

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& base_relations() const { return relations_; }
  // Base name, or base name + "_inv" for inverse ids.
  std::string relation_name(RelationId r) const;
  std::optional<RelationId> find_relation(std::string_view name) const;
  const std::string& entity_name(EntityId e) const { return entities_.name(e); }

  // Full sorted adjacency of e.
  std::span<const Edge> adjacency(EntityId e) const;
  std::size_t out_degree(EntityId e) const { return adjacency(e).size(); }
  // First min(degree, cap) edges of e under the adjacency order.
  std::vector<Edge> outgoing_edges(EntityId e, std::size_t cap = kNoCap) const;
  bool has_edge(EntityId head, RelationId r, EntityId tail) const;

  // Forward triples in (head, relation, tail) order.
  std::vector<Triple> triples() const;

 private:
  void check_entity(EntityId e) const;

  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<std::size_t> offsets_;
  std::vector<Edge> edges_;
  std::size_t triple_count_ = 0;
  std::size_t duplicates_ = 0;
};

class KnowledgeGraph::Builder {
 public:
  Triple add_triple(std::string_view head, std::string_view relation, std::string_view tail);
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);
  // Adds a triple over already-registered ids.
  void add_triple(const Triple& t);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }

  KnowledgeGraph build() const;

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
};

// Parses `head<TAB>relation<TAB>tail` lines into `builder`. Blank lines are
// skipped; anything else malformed raises DataError naming the line.
void read_triples(const std::filesystem::path& path, KnowledgeGraph::Builder& builder,
                  std::vector<Triple>* out = nullptr);

KnowledgeGraph load_triples(const std::filesystem::path& path);

void write_triples(const std::filesystem::path& path, const KnowledgeGraph& kg, std::span<const Triple> triples);

// `name<TAB>id` dumps. The relation dump lists inverse ids too.
void write_entity_vocab(const std::filesystem::path& path, const KnowledgeGraph& kg);
void write_relation_vocab(const std::filesystem::path& path, const KnowledgeGraph& kg);
// Hash over both vocabularies, used to pair checkpoints with datasets.
std::uint64_t vocabulary_hash(const KnowledgeGraph& kg);

// A read-only view of a graph with some directed edges (and their inverses)
// removed. Holds no shared mutable state.
class GraphView {
 public:
  explicit GraphView(const KnowledgeGraph& kg) : kg_(&kg) {}
  GraphView(const KnowledgeGraph& kg, std::span<const Triple> forbidden);

  // Same view plus extra triples (inverse-augmented) layered on top.
  GraphView with_extra_edges(std::span<const Triple> extra) const;

  const KnowledgeGraph& graph() const { return *kg_; }
  std::span<const Triple> forbidden() const { return forbidden_; }

  // Masking happens before the cap, so masked edges never use up the budget.
  std::vector<Edge> outgoing_edges(EntityId e, std::size_t cap = kNoCap) const;
  bool has_edge(EntityId head, RelationId r, EntityId tail) const;
  bool is_forbidden(EntityId head, const Edge& edge) const;

 private:
  const KnowledgeGraph* kg_;
  std::vector<Triple> forbidden_;  // sorted, closed under inversion
  std::vector<Triple> extra_;      // sorted, closed under inversion
};

GraphView mask_edges(const KnowledgeGraph& kg, std::span<const Triple> forbidden);

// BFS hop count on the (inverse-augmented) view; nullopt when b is not
// reachable within `horizon` hops.
std::optional<std::size_t> shortest_distance(const GraphView& view, EntityId a, EntityId b, std::size_t horizon);

struct FilterResult {
  std::vector<EntityPair> retained;
  double removed_fraction = 0;
};

// Keeps pairs whose shortest distance is < max_distance.
FilterResult filter_eval_pairs(const GraphView& view, std::span<const EntityPair> pairs, std::size_t max_distance);

}  // namespace cogkr
