#include "cogkr/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cogkr/errors.hpp"

namespace cogkr {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

ParamId ParameterStore::add(std::string name, Tensor value, ParamGroup group, bool row_sparse) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  if (row_sparse && value.rank() != 2) throw ShapeError("row-sparse parameter must be a matrix: " + name);
  const auto id = static_cast<ParamId>(params_.size());
  Parameter p;
  p.name = name;
  p.group = group;
  p.row_sparse = row_sparse;
  p.grad = value;
  p.grad.fill(0);
  p.adam.first_moment = p.grad;
  p.adam.second_moment = p.grad;
  p.value = std::move(value);
  params_.push_back(std::move(p));
  index_.emplace(std::move(name), id);
  return id;
}

std::optional<ParamId> ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterStore::require(const std::string& name) const {
  if (auto id = find(name)) return *id;
  throw DataError("missing parameter: " + name);
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0);
}

std::size_t ParameterStore::coordinate_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> ParameterStore::snapshot_values() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::restore_values(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw ShapeError("restore_values: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i].value)) throw ShapeError("restore_values: shape mismatch for " + params_[i].name);
    params_[i].value = values[i];
  }
}

GradBuffer::GradBuffer(const ParameterStore& store) {
  dense_.resize(store.size());
  sparse_.resize(store.size());
  for (ParamId id = 0; id < store.size(); ++id) {
    const auto& p = store[id];
    if (p.row_sparse) {
      sparse_[id].enabled = true;
      sparse_[id].cols = p.value.cols();
    } else {
      dense_[id] = p.value;
      dense_[id].fill(0);
    }
  }
}

void GradBuffer::clear() {
  for (auto& t : dense_) t.fill(0);
  for (auto& s : sparse_) {
    s.rows.clear();
    s.slot.clear();
    s.data.clear();
  }
}

std::span<Scalar> GradBuffer::table_row(ParamId id, std::size_t row) {
  auto& s = sparse_[id];
  auto [it, inserted] = s.slot.try_emplace(row, s.rows.size());
  if (inserted) {
    s.rows.push_back(row);
    s.data.resize(s.data.size() + s.cols, 0);
  }
  return {s.data.data() + it->second * s.cols, s.cols};
}

void GradBuffer::accumulate_into(ParameterStore& store, Scalar scale) const {
  for (ParamId id = 0; id < store.size(); ++id) {
    auto& g = store[id].grad;
    const auto& s = sparse_[id];
    if (s.enabled) {
      for (std::size_t k = 0; k < s.rows.size(); ++k) {
        auto dst = g.row(s.rows[k]);
        const Scalar* src = s.data.data() + k * s.cols;
        for (std::size_t c = 0; c < s.cols; ++c) dst[c] += scale * src[c];
      }
    } else {
      const auto& d = dense_[id];
      for (std::size_t i = 0; i < d.size(); ++i) g[i] += scale * d[i];
    }
  }
}

Scalar GradBuffer::coordinate(ParamId id, std::size_t flat) const {
  const auto& s = sparse_[id];
  if (!s.enabled) return dense_[id][flat];
  auto it = s.slot.find(flat / s.cols);
  if (it == s.slot.end()) return 0;
  return s.data[it->second * s.cols + flat % s.cols];
}

std::vector<std::size_t> GradBuffer::touched_rows(ParamId id) const { return sparse_[id].rows; }

bool GradBuffer::all_zero() const {
  for (const auto& d : dense_)
    if (std::any_of(d.data().begin(), d.data().end(), [](Scalar v) { return v != 0; })) return false;
  for (const auto& s : sparse_)
    if (std::any_of(s.data.begin(), s.data.end(), [](Scalar v) { return v != 0; })) return false;
  return true;
}

void adam_step(ParameterStore& store, const AdamConfig& config) {
  for (auto& p : store) {
    const Scalar lr = p.group == ParamGroup::embedding ? config.lr_embedding : config.lr_other;
    auto& st = p.adam;
    ++st.step;
    const Scalar t = static_cast<Scalar>(st.step);
    const Scalar bc1 = Scalar(1) - std::pow(config.beta1, t);
    const Scalar bc2 = Scalar(1) - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const Scalar g = p.grad[i] + config.weight_decay * p.value[i];
      st.first_moment[i] = config.beta1 * st.first_moment[i] + (1 - config.beta1) * g;
      st.second_moment[i] = config.beta2 * st.second_moment[i] + (1 - config.beta2) * g * g;
      const Scalar m_hat = st.first_moment[i] / bc1;
      const Scalar v_hat = st.second_moment[i] / bc2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    p.grad.fill(0);
  }
}

Scalar clip_grad_norm(ParameterStore& store, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& p : store)
    for (Scalar g : p.grad.data()) sq += g * g;
  const Scalar norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const Scalar k = max_norm / norm;
    for (auto& p : store)
      for (auto& g : p.grad.data()) g *= k;
  }
  return norm;
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'G', 'K', 'R', 'P', 'S', '1'};
constexpr std::uint32_t kSnapshotVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("snapshot truncated");
  return v;
}

}  // namespace

void save_snapshot(const ParameterStore& store, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, sizeof(Scalar));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(p.group));
    put<std::uint8_t>(out, p.row_sparse ? 1 : 0);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    put<std::uint64_t>(out, p.value.rows());
    put<std::uint64_t>(out, p.value.cols());
    out.write(reinterpret_cast<const char*>(p.value.data().data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(Scalar)));
  }
  if (!out) throw DataError("snapshot write failed");
}

void save_snapshot(const ParameterStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  save_snapshot(store, out);
}

ParameterStore load_snapshot(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a parameter snapshot");
  if (get<std::uint32_t>(in) != kSnapshotVersion) throw DataError("unsupported snapshot version");
  if (get<std::uint32_t>(in) != sizeof(Scalar))
    throw DataError("snapshot scalar width differs from this build");
  const auto count = get<std::uint32_t>(in);
  ParameterStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto group = static_cast<ParamGroup>(get<std::uint8_t>(in));
    const bool row_sparse = get<std::uint8_t>(in) != 0;
    const auto rank = get<std::uint8_t>(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rank != 1 && rank != 2) throw DataError("bad tensor rank in snapshot for " + name);
    Tensor t = rank == 1 ? Tensor::vector(rows) : Tensor::matrix(rows, cols);
    in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
    if (!in) throw DataError("snapshot truncated in " + name);
    store.add(std::move(name), std::move(t), group, row_sparse);
  }
  return store;
}

ParameterStore load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot: " + path.string());
  return load_snapshot(in);
}

}  // namespace cogkr
