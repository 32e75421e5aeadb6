#pragma once

#include "cogkr/knowledge_graph.hpp"
#include "cogkr/model.hpp"
#include "cogkr/tape.hpp"

namespace cogkr {

// omega_{h,t} for a support pair, plus where it came from.
struct RelationSummary {
  Tensor vector;
  EntityPair source;
};

// omega_e = sigma(W_s v_e + b_s + W_c * mean_{(r,e') in N_e} [v_r, v_e'])
// N_e is the capped adjacency of e in `view`; the mean term is zero when N_e
// is empty.
NodeId encode_entity(Tape& tape, const ModelLayout& model, const GraphView& view, EntityId e, std::size_t degree_cap);

// sigma(W_o [omega_h, omega_t] + b_o). Pass a view with the support edge
// masked, or the summary can read the answer off the adjacency.
NodeId summarize_pair(Tape& tape, const ModelLayout& model, const GraphView& view, EntityPair pair,
                      std::size_t degree_cap);

// Tape-free conveniences.
Tensor encode_entity(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityId e,
                     std::size_t degree_cap);
RelationSummary summarize_pair(const ParameterStore& params, const ModelLayout& model, const GraphView& view,
                               EntityPair pair, std::size_t degree_cap);

}  // namespace cogkr
