#pragma once

#include <string>

#include "cogkr/parameters.hpp"
#include "cogkr/random.hpp"

namespace cogkr {

// How the per-node answer score is read off [x_e, omega].
//   linear: one 2d -> 1 linear map.
//   gated:  sum_i sigmoid(W_p [x_e, omega])_i with W_p of shape (d, 2d), which
//           keeps the score dependent on how x_e and omega interact.
enum class PredictionHead { linear, gated };

const char* to_string(PredictionHead head);
PredictionHead parse_prediction_head(std::string_view name);

struct ModelDims {
  std::size_t embedding_dim = 100;  // entity / relation embeddings
  std::size_t hidden_dim = 100;     // omega, x_e
  PredictionHead head = PredictionHead::linear;
};

// Ids of every trainable tensor of the model inside a ParameterStore.
//
//   entity_emb  (|E|, k)      relation_emb (2|R|, k)
//   summary:    W_s (d, k)  b_s (d)  W_c (d, 2k)  W_o (d, 2d)  b_o (d)
//   policy:     W_1 (2k + d, d)  W_2 (d, 2d)  no_action (2k + d)
//   update:     W_3 (d, k + d)  W_4 (d, k)  b_4 (d)
//   answer:     W_p (1, 2d) or (d, 2d)
struct ModelLayout {
  ModelDims dims;
  ParamId entity_emb = 0;
  ParamId relation_emb = 0;
  ParamId w_s = 0, b_s = 0, w_c = 0, w_o = 0, b_o = 0;
  ParamId w_1 = 0, w_2 = 0, no_action = 0;
  ParamId w_3 = 0, w_4 = 0, b_4 = 0;
  ParamId w_p = 0;

  std::size_t candidate_dim() const { return 2 * dims.embedding_dim + dims.hidden_dim; }

  // Registers freshly initialized parameters: embeddings uniform(-0.1, 0.1),
  // weights Glorot-uniform, biases zero.
  static ModelLayout create(ParameterStore& store, std::size_t num_entities, std::size_t num_relations,
                            const ModelDims& dims, Rng& rng);
  // Re-binds to a store loaded from a snapshot; dims are inferred from shapes.
  static ModelLayout bind(const ParameterStore& store);
};

}  // namespace cogkr
