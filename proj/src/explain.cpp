#include "cogkr/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace cogkr {

std::vector<std::size_t> path_nodes(const CognitiveGraph& graph, EntityId answer) {
  const auto target = graph.find(answer);
  if (!target || graph.size() == 0) return {};
  const std::size_t n = graph.size();
  std::vector<std::vector<std::size_t>> fwd(n), back(n);
  for (const GraphEdge& e : graph.edges) {
    fwd[e.source].push_back(e.target);
    back[e.target].push_back(e.source);
  }
  const auto reach = [n](std::size_t from, const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
    return seen;
  };
  const auto from_head = reach(0, fwd);
  const auto to_answer = reach(*target, back);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (from_head[i] && to_answer[i]) out.push_back(i);
  return out;
}

std::string dot_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    if (c == '\n') {
      q += "\\n";
      continue;
    }
    q += c;
  }
  return q + '"';
}

void write_dot(std::ostream& out, const Rollout& rollout, const KnowledgeGraph& kg, EntityId answer, bool pruned) {
  const CognitiveGraph& g = rollout.graph;
  std::vector<bool> keep(g.size(), !pruned);
  if (pruned) {
    for (std::size_t i : path_nodes(g, answer)) keep[i] = true;
    if (!keep.empty()) keep[0] = true;
  }
  out << "digraph cognitive_graph {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n";
  char score[64];
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!keep[i]) continue;
    const EntityId e = g.nodes[i];
    std::snprintf(score, sizeof score, "%.4g", static_cast<double>(rollout.scores.size() > i ? rollout.scores[i] : 0));
    std::string attrs = "label=" + dot_quote(kg.entity_name(e) + "\n" + score);
    if (i == 0) {
      attrs += ", shape=box, style=\"rounded,bold\"";
    } else if (e == answer) {
      attrs += ", shape=doublecircle, style=bold";
    } else {
      attrs += ", shape=ellipse";
    }
    if (i == 0 && e == answer) attrs += ", peripheries=2";
    out << "  n" << i << " [" << attrs << "];\n";
  }
  std::vector<bool> on_path(g.size(), false);
  if (pruned)
    for (std::size_t i : path_nodes(g, answer)) on_path[i] = true;
  for (const GraphEdge& e : g.edges) {
    if (!keep[e.source] || !keep[e.target]) continue;
    if (pruned && !(on_path[e.source] && on_path[e.target])) continue;
    out << "  n" << e.source << " -> n" << e.target << " [label=" << dot_quote(kg.relation_name(e.relation))
        << "];\n";
  }
  out << "}\n";
}

std::vector<RankedEntity> ranked_answers(const Rollout& rollout, std::size_t limit) {
  std::vector<RankedEntity> out;
  for (std::size_t i = 0; i < rollout.graph.size(); ++i)
    out.push_back({rollout.graph.nodes[i], rollout.scores[i], rollout.distribution[i]});
  std::sort(out.begin(), out.end(), [](const RankedEntity& a, const RankedEntity& b) {
    return a.score != b.score ? a.score > b.score : a.entity < b.entity;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace cogkr
