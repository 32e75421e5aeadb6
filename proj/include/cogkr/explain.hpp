#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cogkr/knowledge_graph.hpp"
#include "cogkr/reasoner.hpp"

namespace cogkr {

// Node indices of the rollout graph lying on some path from the query head
// (node 0) to `answer`, in node order. Empty if the answer is not a node.
std::vector<std::size_t> path_nodes(const CognitiveGraph& graph, EntityId answer);

// Graphviz DOT of the cognitive graph. The query head is drawn as a rounded
// box, the answer as a double circle, other nodes as ellipses. With
// `pruned`, only nodes and edges on paths from the head to the answer are
// kept. Output order follows node insertion order, so it is deterministic.
void write_dot(std::ostream& out, const Rollout& rollout, const KnowledgeGraph& kg, EntityId answer, bool pruned);

// Quoted DOT identifier.
std::string dot_quote(const std::string& s);

struct RankedEntity {
  EntityId entity = 0;
  Scalar score = 0;
  Scalar probability = 0;
};

// Nodes by descending score, ties to the smaller entity id.
std::vector<RankedEntity> ranked_answers(const Rollout& rollout, std::size_t limit);

}  // namespace cogkr
