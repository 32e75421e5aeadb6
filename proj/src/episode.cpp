#include "cogkr/episode.hpp"

#include "cogkr/errors.hpp"

namespace cogkr {

std::vector<Triple> leakage_mask(const KnowledgeGraph& kg, const TaskRelation& rel, EntityPair support,
                                 EntityPair query) {
  std::vector<Triple> mask;
  if (!rel.kg_relation) return mask;
  const RelationId r = *rel.kg_relation;
  for (const EntityPair& p : {query, support})
    if (kg.has_edge(p.head, r, p.tail)) mask.push_back({p.head, r, p.tail});
  return mask;
}

Episode sample_episode(const KnowledgeGraph& kg, const std::vector<TaskRelation>& section, Rng& rng) {
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < section.size(); ++i)
    if (section[i].pairs.size() >= 2) usable.push_back(i);
  if (usable.empty()) throw DataError("no task relation has at least 2 pairs");
  Episode ep;
  ep.relation = usable[uniform_index(rng, usable.size())];
  const TaskRelation& rel = section[ep.relation];
  const std::size_t s = uniform_index(rng, rel.pairs.size());
  std::size_t q = uniform_index(rng, rel.pairs.size() - 1);
  if (q >= s) ++q;
  ep.support = rel.pairs[s];
  ep.query = rel.pairs[q];
  ep.mask = leakage_mask(kg, rel, ep.support, ep.query);
  return ep;
}

GraphView episode_view(const KnowledgeGraph& kg, const TaskRelation& rel, const Episode& episode,
                       bool add_support_edge) {
  GraphView view(kg, episode.mask);
  if (add_support_edge && rel.kg_relation) {
    const Triple support{episode.support.head, *rel.kg_relation, episode.support.tail};
    return view.with_extra_edges({&support, 1});
  }
  return view;
}

}  // namespace cogkr
