#pragma once

#include <vector>

#include "cogkr/dataset.hpp"
#include "cogkr/knowledge_graph.hpp"
#include "cogkr/random.hpp"

namespace cogkr {

// One training or evaluation step: a support pair of task relation `relation`
// (index into its split section) and a query with its true tail.
struct Episode {
  std::size_t relation = 0;
  EntityPair support;
  EntityPair query;
  // Directed edges hidden from every view of this episode; inverses are
  // implied.
  std::vector<Triple> mask;
};

// Mask for a relation whose triples may sit in the graph: the query edge and
// the support edge. Empty when the relation has no graph id.
std::vector<Triple> leakage_mask(const KnowledgeGraph& kg, const TaskRelation& rel, EntityPair support,
                                 EntityPair query);

// Uniform relation (among those with >= 2 pairs), then a support pair and a
// distinct query pair, both uniform.
Episode sample_episode(const KnowledgeGraph& kg, const std::vector<TaskRelation>& section, Rng& rng);

// The graph view the episode's summary and rollout both read. With
// `add_support_edge`, a relation that has a graph id gets its support edge
// layered in.
GraphView episode_view(const KnowledgeGraph& kg, const TaskRelation& rel, const Episode& episode,
                       bool add_support_edge = false);

}  // namespace cogkr
