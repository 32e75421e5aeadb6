#include "cogkr/model.hpp"

#include <cmath>

#include "cogkr/errors.hpp"

namespace cogkr {

const char* to_string(PredictionHead head) { return head == PredictionHead::linear ? "linear" : "gated"; }

PredictionHead parse_prediction_head(std::string_view name) {
  if (name == "linear") return PredictionHead::linear;
  if (name == "gated") return PredictionHead::gated;
  throw ConfigError("unknown prediction head: " + std::string(name));
}

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& v : t.data()) v = static_cast<Scalar>(uniform(rng, -bound, bound));
  return t;
}

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_matrix(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

}  // namespace

ModelLayout ModelLayout::create(ParameterStore& store, std::size_t num_entities, std::size_t num_relations,
                                const ModelDims& dims, Rng& rng) {
  const std::size_t k = dims.embedding_dim, d = dims.hidden_dim;
  if (k == 0 || d == 0) throw ConfigError("model dimensions must be positive");
  ModelLayout m;
  m.dims = dims;
  m.entity_emb = store.add("entity_embedding", uniform_matrix(num_entities, k, 0.1, rng), ParamGroup::embedding, true);
  m.relation_emb =
      store.add("relation_embedding", uniform_matrix(num_relations, k, 0.1, rng), ParamGroup::embedding, true);
  m.w_s = store.add("summary.W_s", glorot(d, k, rng), ParamGroup::other);
  m.b_s = store.add("summary.b_s", Tensor::vector(d), ParamGroup::other);
  m.w_c = store.add("summary.W_c", glorot(d, 2 * k, rng), ParamGroup::other);
  m.w_o = store.add("summary.W_o", glorot(d, 2 * d, rng), ParamGroup::other);
  m.b_o = store.add("summary.b_o", Tensor::vector(d), ParamGroup::other);
  m.w_1 = store.add("policy.W_1", glorot(2 * k + d, d, rng), ParamGroup::other);
  m.w_2 = store.add("policy.W_2", glorot(d, 2 * d, rng), ParamGroup::other);
  {
    Tensor na = Tensor::vector(2 * k + d);
    for (auto& v : na.data()) v = static_cast<Scalar>(uniform(rng, -0.1, 0.1));
    m.no_action = store.add("policy.no_action", std::move(na), ParamGroup::other);
  }
  m.w_3 = store.add("update.W_3", glorot(d, k + d, rng), ParamGroup::other);
  m.w_4 = store.add("update.W_4", glorot(d, k, rng), ParamGroup::other);
  m.b_4 = store.add("update.b_4", Tensor::vector(d), ParamGroup::other);
  m.w_p = store.add("answer.W_p", glorot(dims.head == PredictionHead::linear ? 1 : d, 2 * d, rng), ParamGroup::other);
  return m;
}

ModelLayout ModelLayout::bind(const ParameterStore& store) {
  ModelLayout m;
  m.entity_emb = store.require("entity_embedding");
  m.relation_emb = store.require("relation_embedding");
  m.w_s = store.require("summary.W_s");
  m.b_s = store.require("summary.b_s");
  m.w_c = store.require("summary.W_c");
  m.w_o = store.require("summary.W_o");
  m.b_o = store.require("summary.b_o");
  m.w_1 = store.require("policy.W_1");
  m.w_2 = store.require("policy.W_2");
  m.no_action = store.require("policy.no_action");
  m.w_3 = store.require("update.W_3");
  m.w_4 = store.require("update.W_4");
  m.b_4 = store.require("update.b_4");
  m.w_p = store.require("answer.W_p");
  m.dims.embedding_dim = store[m.entity_emb].value.cols();
  m.dims.hidden_dim = store[m.b_s].value.size();
  m.dims.head = store[m.w_p].value.rows() == 1 ? PredictionHead::linear : PredictionHead::gated;
  const std::size_t k = m.dims.embedding_dim, d = m.dims.hidden_dim;
  const auto expect = [&](ParamId id, std::size_t r, std::size_t c) {
    const auto& v = store[id].value;
    if (v.rows() != r || (v.rank() == 2 && v.cols() != c))
      throw DataError("parameter " + store[id].name + " has unexpected shape " + v.shape_string());
  };
  expect(m.relation_emb, store[m.relation_emb].value.rows(), k);
  expect(m.w_s, d, k);
  expect(m.w_c, d, 2 * k);
  expect(m.w_o, d, 2 * d);
  expect(m.w_1, 2 * k + d, d);
  expect(m.w_2, d, 2 * d);
  expect(m.no_action, 2 * k + d, 1);
  expect(m.w_3, d, k + d);
  expect(m.w_4, d, k);
  expect(m.w_p, m.dims.head == PredictionHead::linear ? 1 : d, 2 * d);
  return m;
}

}  // namespace cogkr
