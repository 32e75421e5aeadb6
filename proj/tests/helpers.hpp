#pragma once

// Small fixtures and plain-double reference math shared by the unit tests.
// The reference functions deliberately avoid the library kernels so they can
// serve as independent oracles.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cogkr/knowledge_graph.hpp"
#include "cogkr/model.hpp"
#include "cogkr/parameters.hpp"
#include "cogkr/random.hpp"

namespace testing {

using cogkr::Scalar;
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

using TripleNames = std::initializer_list<std::tuple<const char*, const char*, const char*>>;

// Entities and relations are registered in the order given by `entities`
// (when non-empty) and then by first appearance in `triples`.
inline cogkr::KnowledgeGraph make_kg(TripleNames triples, std::initializer_list<const char*> entities = {}) {
  cogkr::KnowledgeGraph::Builder b;
  for (const char* e : entities) b.add_entity(e);
  for (const auto& [h, r, t] : triples) b.add_triple(h, r, t);
  return b.build();
}

inline cogkr::EntityId ent(const cogkr::KnowledgeGraph& kg, const char* name) { return *kg.entities().find(name); }
inline cogkr::RelationId rel(const cogkr::KnowledgeGraph& kg, const char* name) { return *kg.find_relation(name); }

struct Model {
  cogkr::ParameterStore params;
  cogkr::ModelLayout layout;
};

inline Model make_model(const cogkr::KnowledgeGraph& kg, std::size_t k, std::size_t d,
                        cogkr::PredictionHead head = cogkr::PredictionHead::linear, std::uint64_t seed = 3) {
  Model m;
  cogkr::Rng rng(seed);
  cogkr::ModelDims dims;
  dims.embedding_dim = k;
  dims.hidden_dim = d;
  dims.head = head;
  m.layout = cogkr::ModelLayout::create(m.params, kg.num_entities(), kg.num_relations(), dims, rng);
  return m;
}

// Overwrites every parameter with uniform(-scale, scale) draws, so that
// biases and the no-action row are nonzero too.
inline void randomize(cogkr::ParameterStore& params, std::uint64_t seed, double scale = 0.5) {
  cogkr::Rng rng(seed);
  for (auto& p : params)
    for (auto& v : p.value.data()) v = static_cast<Scalar>(cogkr::uniform(rng, -scale, scale));
}

inline void fill(cogkr::ParameterStore& params, cogkr::ParamId id, Scalar v) { params[id].value.fill(v); }

inline Vec row_of(const cogkr::Tensor& t, std::size_t r) {
  Vec out;
  for (Scalar v : t.row(r)) out.push_back(static_cast<double>(v));
  return out;
}
inline Vec vec_of(const cogkr::Tensor& t) {
  Vec out;
  for (Scalar v : t.data()) out.push_back(static_cast<double>(v));
  return out;
}
inline Mat mat_of(const cogkr::Tensor& t) {
  Mat out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = row_of(t, r);
  return out;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline Vec sig(Vec x) {
  for (auto& v : x) v = sig(v);
  return x;
}
inline Vec mv(const Mat& m, const Vec& x) {
  Vec out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += m[i][j] * x[j];
  return out;
}
inline Vec plus(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}
inline Vec cat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}
inline double dotp(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline Vec softmax(const Vec& x) {
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  Vec out(x.size());
  double z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) z += out[i] = std::exp(x[i] - m);
  for (auto& v : out) v /= z;
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cogkr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace testing
