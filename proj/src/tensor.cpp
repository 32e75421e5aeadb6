#include "cogkr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "cogkr/errors.hpp"

namespace cogkr {

Tensor Tensor::vector(std::size_t len, Scalar fill) {
  Tensor t;
  t.rank_ = 1;
  t.rows_ = len;
  t.cols_ = 1;
  t.data_.assign(len, fill);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, Scalar fill) {
  Tensor t;
  t.rank_ = 2;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_.assign(rows * cols, fill);
  return t;
}

Tensor Tensor::from(std::vector<Scalar> values) {
  Tensor t;
  t.rank_ = 1;
  t.rows_ = values.size();
  t.cols_ = 1;
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<Scalar> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) + " values for shape (" +
                     std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  Tensor t;
  t.rank_ = 2;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(values);
  return t;
}

std::string Tensor::shape_string() const {
  if (rank_ == 1) return "(" + std::to_string(rows_) + ",)";
  return "(" + std::to_string(rows_) + ", " + std::to_string(cols_) + ")";
}

void Tensor::fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
}

namespace kernels {

namespace {

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

}  // namespace

Tensor matvec(const Tensor& m, const Tensor& x) {
  require(m.rank() == 2 && x.rank() == 1 && m.cols() == x.size(), "matvec", m, x);
  Tensor y = Tensor::vector(m.rows());
  const Scalar* xs = x.data().data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Scalar* mr = m.row(r).data();
    Scalar acc = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += mr[c] * xs[c];
    y[r] = acc;
  }
  return y;
}

Tensor matmat(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.cols() == b.rows(), "matmat", a, b);
  Tensor c = Tensor::matrix(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Scalar* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Scalar aik = a.at(i, k);
      if (aik == 0) continue;
      const Scalar* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Tensor concat(std::span<const Tensor* const> parts) {
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != 1) throw ShapeError("concat: expects vectors, got " + p->shape_string());
    total += p->size();
  }
  std::vector<Scalar> out;
  out.reserve(total);
  for (const Tensor* p : parts) out.insert(out.end(), p->data().begin(), p->data().end());
  return Tensor::from(std::move(out));
}

Tensor mean_rows(const Tensor& m) {
  if (m.rank() != 2 || m.rows() == 0) throw ShapeError("mean_rows: expects a non-empty matrix, got " + m.shape_string());
  // Running mean: identical rows reproduce the row exactly, which sum / k
  // does not.
  Tensor y = Tensor::vector(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const Scalar w = Scalar(1) / static_cast<Scalar>(r + 1);
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += (row[c] - y[c]) * w;
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add", a, b);
  Tensor y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = sigmoid(v);
  return y;
}

Scalar log_sum_exp(std::span<const Scalar> x) {
  if (x.empty()) throw ShapeError("log_sum_exp: empty input");
  const Scalar mx = *std::max_element(x.begin(), x.end());
  Scalar acc = 0;
  for (Scalar v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 || x.size() == 0) throw ShapeError("softmax: expects a non-empty vector, got " + x.shape_string());
  Tensor y = x;
  const Scalar mx = *std::max_element(y.data().begin(), y.data().end());
  Scalar total = 0;
  for (auto& v : y.data()) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : y.data()) v /= total;
  return y;
}

}  // namespace kernels

}  // namespace cogkr
