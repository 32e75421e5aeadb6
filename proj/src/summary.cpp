#include "cogkr/summary.hpp"

#include <array>
#include <vector>

namespace cogkr {

NodeId encode_entity(Tape& tape, const ModelLayout& model, const GraphView& view, EntityId e, std::size_t degree_cap) {
  NodeId pre = tape.add(tape.matvec(tape.param(model.w_s), tape.lookup(model.entity_emb, e)), tape.param(model.b_s));
  const auto neighbors = view.outgoing_edges(e, degree_cap);
  if (!neighbors.empty()) {
    std::vector<NodeId> rows;
    rows.reserve(neighbors.size());
    for (const Edge& edge : neighbors) {
      const std::array<NodeId, 2> parts{tape.lookup(model.relation_emb, edge.relation),
                                        tape.lookup(model.entity_emb, edge.target)};
      rows.push_back(tape.concat(parts));
    }
    const NodeId mean = tape.mean_rows(tape.stack_rows(rows));
    pre = tape.add(pre, tape.matvec(tape.param(model.w_c), mean));
  }
  return tape.sigmoid(pre);
}

NodeId summarize_pair(Tape& tape, const ModelLayout& model, const GraphView& view, EntityPair pair,
                      std::size_t degree_cap) {
  const std::array<NodeId, 2> ends{encode_entity(tape, model, view, pair.head, degree_cap),
                                   encode_entity(tape, model, view, pair.tail, degree_cap)};
  const NodeId joined = tape.concat(ends);
  return tape.sigmoid(tape.add(tape.matvec(tape.param(model.w_o), joined), tape.param(model.b_o)));
}

Tensor encode_entity(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityId e,
                     std::size_t degree_cap) {
  Tape tape(params);
  return tape.value(encode_entity(tape, model, view, e, degree_cap));
}

RelationSummary summarize_pair(const ParameterStore& params, const ModelLayout& model, const GraphView& view,
                               EntityPair pair, std::size_t degree_cap) {
  Tape tape(params);
  return {tape.value(summarize_pair(tape, model, view, pair, degree_cap)), pair};
}

}  // namespace cogkr
