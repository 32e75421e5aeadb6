#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cogkr {

#ifdef COGKR_FLOAT32
using Scalar = float;
#else
using Scalar = double;
#endif

// Dense row-major tensor of rank 1 (len,) or rank 2 (rows, cols).
class Tensor {
 public:
  Tensor() = default;

  static Tensor vector(std::size_t len, Scalar fill = 0);
  static Tensor matrix(std::size_t rows, std::size_t cols, Scalar fill = 0);
  static Tensor from(std::vector<Scalar> values);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<Scalar> values);

  std::size_t rank() const { return rank_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }
  Scalar& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Scalar at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Scalar> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Scalar> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Tensor& other) const {
    return rank_ == other.rank_ && rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  void fill(Scalar v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rank_ = 1;
  std::size_t rows_ = 0;
  std::size_t cols_ = 1;
  std::vector<Scalar> data_;
};

// Plain forward kernels. The tape builds on these; they are also handy for
// oracles and inference-only code paths.
namespace kernels {

Tensor matvec(const Tensor& m, const Tensor& x);
Tensor matmat(const Tensor& a, const Tensor& b);
Tensor concat(std::span<const Tensor* const> parts);
Tensor mean_rows(const Tensor& m);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& x);
// Shift-stabilized: subtracts the max logit before exponentiating.
Tensor softmax(const Tensor& x);
Scalar log_sum_exp(std::span<const Scalar> x);
Scalar sigmoid(Scalar x);

}  // namespace kernels

}  // namespace cogkr
