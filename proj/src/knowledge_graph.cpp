#include "cogkr/knowledge_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cogkr/errors.hpp"
#include "cogkr/random.hpp"

namespace cogkr {

std::uint32_t Vocabulary::get_or_add(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

RelationId KnowledgeGraph::inverse(RelationId r) const {
  const auto n = static_cast<RelationId>(relations_.size());
  if (r >= 2 * n) throw DataError("relation id out of range: " + std::to_string(r));
  return r < n ? r + n : r - n;
}

std::string KnowledgeGraph::relation_name(RelationId r) const {
  const auto n = relations_.size();
  if (r >= 2 * n) throw DataError("relation id out of range: " + std::to_string(r));
  return r < n ? relations_.name(r) : relations_.name(static_cast<std::uint32_t>(r - n)) + "_inv";
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
  if (auto id = relations_.find(name)) return *id;
  constexpr std::string_view suffix = "_inv";
  if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix) {
    if (auto id = relations_.find(name.substr(0, name.size() - suffix.size())))
      return static_cast<RelationId>(*id + relations_.size());
  }
  return std::nullopt;
}

void KnowledgeGraph::check_entity(EntityId e) const {
  if (e >= num_entities()) throw DataError("entity id out of range: " + std::to_string(e));
}

std::span<const Edge> KnowledgeGraph::adjacency(EntityId e) const {
  check_entity(e);
  return {edges_.data() + offsets_[e], offsets_[e + 1] - offsets_[e]};
}

std::vector<Edge> KnowledgeGraph::outgoing_edges(EntityId e, std::size_t cap) const {
  if (cap == 0) throw DataError("degree cap must be >= 1");
  auto adj = adjacency(e);
  const std::size_t n = std::min(adj.size(), cap);
  return {adj.begin(), adj.begin() + static_cast<std::ptrdiff_t>(n)};
}

bool KnowledgeGraph::has_edge(EntityId head, RelationId r, EntityId tail) const {
  auto adj = adjacency(head);
  return std::binary_search(adj.begin(), adj.end(), Edge{r, tail});
}

std::vector<Triple> KnowledgeGraph::triples() const {
  std::vector<Triple> out;
  out.reserve(triple_count_);
  for (EntityId h = 0; h < num_entities(); ++h)
    for (const Edge& e : adjacency(h))
      if (!is_inverse(e.relation)) out.push_back({h, e.relation, e.target});
  return out;
}

Triple KnowledgeGraph::Builder::add_triple(std::string_view head, std::string_view relation, std::string_view tail) {
  Triple t;
  t.head = entities_.get_or_add(head);
  t.relation = relations_.get_or_add(relation);
  t.tail = entities_.get_or_add(tail);
  triples_.push_back(t);
  return t;
}

EntityId KnowledgeGraph::Builder::add_entity(std::string_view name) { return entities_.get_or_add(name); }

RelationId KnowledgeGraph::Builder::add_relation(std::string_view name) { return relations_.get_or_add(name); }

void KnowledgeGraph::Builder::add_triple(const Triple& t) {
  if (t.head >= entities_.size() || t.tail >= entities_.size() || t.relation >= relations_.size())
    throw DataError("add_triple: unregistered id");
  triples_.push_back(t);
}

KnowledgeGraph KnowledgeGraph::Builder::build() const {
  KnowledgeGraph kg;
  kg.entities_ = entities_;
  kg.relations_ = relations_;

  std::vector<Triple> unique = triples_;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  kg.duplicates_ = triples_.size() - unique.size();
  kg.triple_count_ = unique.size();

  const auto n_rel = static_cast<RelationId>(relations_.size());
  std::vector<std::pair<EntityId, Edge>> directed;
  directed.reserve(2 * unique.size());
  for (const Triple& t : unique) {
    directed.push_back({t.head, Edge{t.relation, t.tail}});
    directed.push_back({t.tail, Edge{t.relation + n_rel, t.head}});
  }
  std::sort(directed.begin(), directed.end());

  kg.offsets_.assign(entities_.size() + 1, 0);
  for (const auto& [src, edge] : directed) ++kg.offsets_[src + 1];
  for (std::size_t i = 1; i < kg.offsets_.size(); ++i) kg.offsets_[i] += kg.offsets_[i - 1];
  kg.edges_.reserve(directed.size());
  for (const auto& [src, edge] : directed) kg.edges_.push_back(edge);
  return kg;
}

void read_triples(const std::filesystem::path& path, KnowledgeGraph::Builder& builder, std::vector<Triple>* out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view tokens[3];
    std::size_t count = 0;
    while (true) {
      const auto tab = rest.find('\t');
      if (count < 3) tokens[count] = rest.substr(0, tab);
      ++count;
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (count != 3 || tokens[0].empty() || tokens[1].empty() || tokens[2].empty()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected head<TAB>relation<TAB>tail, got " + std::to_string(count) + " field(s)");
    }
    const Triple t = builder.add_triple(tokens[0], tokens[1], tokens[2]);
    if (out) out->push_back(t);
  }
}

KnowledgeGraph load_triples(const std::filesystem::path& path) {
  KnowledgeGraph::Builder builder;
  read_triples(path, builder);
  return builder.build();
}

void write_triples(const std::filesystem::path& path, const KnowledgeGraph& kg, std::span<const Triple> triples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const Triple& t : triples)
    out << kg.entity_name(t.head) << '\t' << kg.relation_name(t.relation) << '\t' << kg.entity_name(t.tail) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

void write_entity_vocab(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (EntityId e = 0; e < kg.num_entities(); ++e) out << kg.entity_name(e) << '\t' << e << '\n';
}

void write_relation_vocab(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (RelationId r = 0; r < kg.num_relations(); ++r) out << kg.relation_name(r) << '\t' << r << '\n';
}

std::uint64_t vocabulary_hash(const KnowledgeGraph& kg) {
  std::uint64_t h = fnv1a("cogkr-vocab");
  for (const auto& name : kg.entities().names()) h = mix64(h ^ fnv1a(name));
  h = mix64(h ^ kg.num_entities());
  for (const auto& name : kg.base_relations().names()) h = mix64(h ^ fnv1a(name));
  return mix64(h ^ kg.num_base_relations());
}

GraphView::GraphView(const KnowledgeGraph& kg, std::span<const Triple> forbidden) : kg_(&kg) {
  forbidden_.reserve(2 * forbidden.size());
  for (const Triple& t : forbidden) {
    if (t.head >= kg.num_entities() || t.tail >= kg.num_entities() || t.relation >= kg.num_relations())
      throw DataError("mask_edges: forbidden edge references an invalid id");
    forbidden_.push_back(t);
    forbidden_.push_back({t.tail, kg.inverse(t.relation), t.head});
  }
  std::sort(forbidden_.begin(), forbidden_.end());
  forbidden_.erase(std::unique(forbidden_.begin(), forbidden_.end()), forbidden_.end());
}

bool GraphView::is_forbidden(EntityId head, const Edge& edge) const {
  return std::binary_search(forbidden_.begin(), forbidden_.end(), Triple{head, edge.relation, edge.target});
}

GraphView GraphView::with_extra_edges(std::span<const Triple> extra) const {
  GraphView out = *this;
  for (const Triple& t : extra) {
    if (t.head >= kg_->num_entities() || t.tail >= kg_->num_entities() || t.relation >= kg_->num_relations())
      throw DataError("with_extra_edges: triple references an invalid id");
    out.extra_.push_back(t);
    out.extra_.push_back({t.tail, kg_->inverse(t.relation), t.head});
  }
  std::sort(out.extra_.begin(), out.extra_.end());
  out.extra_.erase(std::unique(out.extra_.begin(), out.extra_.end()), out.extra_.end());
  return out;
}

std::vector<Edge> GraphView::outgoing_edges(EntityId e, std::size_t cap) const {
  if (cap == 0) throw DataError("degree cap must be >= 1");
  const auto first = std::lower_bound(forbidden_.begin(), forbidden_.end(), Triple{e, 0, 0});
  const bool masked = first != forbidden_.end() && first->head == e;
  const auto extra_first = std::lower_bound(extra_.begin(), extra_.end(), Triple{e, 0, 0});
  const bool extended = extra_first != extra_.end() && extra_first->head == e;
  if (!masked && !extended) return kg_->outgoing_edges(e, cap);

  std::vector<Edge> merged;
  for (const Edge& edge : kg_->adjacency(e))
    if (!is_forbidden(e, edge)) merged.push_back(edge);
  if (extended) {
    for (auto it = extra_first; it != extra_.end() && it->head == e; ++it) {
      const Edge edge{it->relation, it->tail};
      if (!is_forbidden(e, edge)) merged.push_back(edge);
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  }
  if (merged.size() > cap) merged.resize(cap);
  return merged;
}

bool GraphView::has_edge(EntityId head, RelationId r, EntityId tail) const {
  if (is_forbidden(head, Edge{r, tail})) return false;
  return kg_->has_edge(head, r, tail) || std::binary_search(extra_.begin(), extra_.end(), Triple{head, r, tail});
}

GraphView mask_edges(const KnowledgeGraph& kg, std::span<const Triple> forbidden) { return GraphView(kg, forbidden); }

std::optional<std::size_t> shortest_distance(const GraphView& view, EntityId a, EntityId b, std::size_t horizon) {
  const auto& kg = view.graph();
  if (a >= kg.num_entities() || b >= kg.num_entities()) throw DataError("shortest_distance: entity id out of range");
  if (a == b) return 0;
  std::unordered_set<EntityId> seen{a};
  std::vector<EntityId> layer{a}, next;
  for (std::size_t depth = 1; depth <= horizon && !layer.empty(); ++depth) {
    next.clear();
    for (EntityId u : layer) {
      for (const Edge& e : view.outgoing_edges(u)) {
        if (e.target == b) return depth;
        if (seen.insert(e.target).second) next.push_back(e.target);
      }
    }
    layer.swap(next);
  }
  return std::nullopt;
}

FilterResult filter_eval_pairs(const GraphView& view, std::span<const EntityPair> pairs, std::size_t max_distance) {
  if (max_distance < 1) throw ConfigError("filter_eval_pairs: max_distance must be >= 1");
  FilterResult result;
  for (const auto& p : pairs) {
    if (shortest_distance(view, p.head, p.tail, max_distance - 1)) result.retained.push_back(p);
  }
  if (!pairs.empty())
    result.removed_fraction = static_cast<double>(pairs.size() - result.retained.size()) / static_cast<double>(pairs.size());
  return result;
}

}  // namespace cogkr
