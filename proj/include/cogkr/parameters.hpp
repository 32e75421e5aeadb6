#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cogkr/tensor.hpp"

namespace cogkr {

using ParamId = std::uint32_t;

// Learning-rate group. Embedding tables and everything else train at
// different rates.
enum class ParamGroup : std::uint8_t { embedding = 0, other = 1 };

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
};

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::other;
  // Tables are looked up one row at a time; their per-episode gradients are
  // kept row-sparse.
  bool row_sparse = false;
  Tensor value;
  Tensor grad;
  AdamState adam;
};

class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value, ParamGroup group, bool row_sparse = false);

  std::size_t size() const { return params_.size(); }
  std::optional<ParamId> find(const std::string& name) const;
  ParamId require(const std::string& name) const;

  Parameter& operator[](ParamId id) { return params_[id]; }
  const Parameter& operator[](ParamId id) const { return params_[id]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t coordinate_count() const;

  // Values only (no gradients or optimizer state).
  std::vector<Tensor> snapshot_values() const;
  void restore_values(const std::vector<Tensor>& values);

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
};

// Private per-episode gradient accumulator. Dense parameters get a full
// tensor; row-sparse tables only hold the rows that were touched.
class GradBuffer {
 public:
  explicit GradBuffer(const ParameterStore& store);

  void clear();
  Tensor& dense(ParamId id) { return dense_[id]; }
  const Tensor& dense(ParamId id) const { return dense_[id]; }
  // Row slice of a row-sparse table's gradient, created zeroed on first use.
  std::span<Scalar> table_row(ParamId id, std::size_t row);
  bool is_row_sparse(ParamId id) const { return sparse_[id].enabled; }

  // Adds scale * this into store gradients. Rows are visited in first-touch
  // order, which keeps reductions bitwise reproducible.
  void accumulate_into(ParameterStore& store, Scalar scale) const;

  // Gradient of coordinate `flat` of parameter `id` (0 for untouched rows).
  Scalar coordinate(ParamId id, std::size_t flat) const;
  std::vector<std::size_t> touched_rows(ParamId id) const;
  bool all_zero() const;

 private:
  struct SparseRows {
    bool enabled = false;
    std::size_t cols = 0;
    std::vector<std::size_t> rows;
    std::unordered_map<std::size_t, std::size_t> slot;
    std::vector<Scalar> data;
  };
  std::vector<Tensor> dense_;
  std::vector<SparseRows> sparse_;
};

struct AdamConfig {
  Scalar lr_embedding = 1e-5;
  Scalar lr_other = 1e-4;
  Scalar weight_decay = 1e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

// One Adam update with bias correction. L2 enters as grad += wd * value before
// the moment update. Gradients are zeroed afterwards.
void adam_step(ParameterStore& store, const AdamConfig& config);

// Global-norm clipping of the store gradients; returns the pre-clip norm.
Scalar clip_grad_norm(ParameterStore& store, Scalar max_norm);

// Binary snapshot: magic, version, scalar width, then per parameter
// (name, group, row_sparse, rank, dims, little-endian payload).
void save_snapshot(const ParameterStore& store, const std::filesystem::path& path);
void save_snapshot(const ParameterStore& store, std::ostream& out);
ParameterStore load_snapshot(const std::filesystem::path& path);
ParameterStore load_snapshot(std::istream& in);

}  // namespace cogkr
