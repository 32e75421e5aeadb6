#include "cogkr/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cogkr/errors.hpp"

namespace cogkr {

namespace {

constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tape::Tape(const ParameterStore& params) : params_(&params), param_nodes_(params.size(), kNoNode) {}

NodeId Tape::push(Node node, const char* op_name) {
  const Tensor& v = node.alias ? *node.alias : node.value;
  if (!v.all_finite()) throw NumericError(std::string("non-finite output from ") + op_name);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tensor& Tape::value(NodeId id) const {
  const Node& n = nodes_[id];
  return n.alias ? *n.alias : n.value;
}

NodeId Tape::param(ParamId id) {
  if (param_nodes_[id] != kNoNode) return param_nodes_[id];
  Node n;
  n.op = Op::param;
  n.param = id;
  n.alias = &(*params_)[id].value;
  nodes_.push_back(std::move(n));
  param_nodes_[id] = static_cast<NodeId>(nodes_.size() - 1);
  return param_nodes_[id];
}

NodeId Tape::constant(Tensor value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n), "constant");
}

NodeId Tape::lookup(ParamId table, std::size_t row) {
  const Tensor& t = (*params_)[table].value;
  if (t.rank() != 2 || row >= t.rows())
    throw ShapeError("lookup: row " + std::to_string(row) + " out of range for " + t.shape_string());
  Node n;
  n.op = Op::lookup;
  n.param = table;
  n.row = row;
  auto r = t.row(row);
  n.value = Tensor::from(std::vector<Scalar>(r.begin(), r.end()));
  return push(std::move(n), "lookup");
}

NodeId Tape::matvec(NodeId m, NodeId x) {
  Node n;
  n.op = Op::matvec;
  n.inputs = {m, x};
  n.value = kernels::matvec(value(m), value(x));
  return push(std::move(n), "matvec");
}

NodeId Tape::matmat(NodeId a, NodeId b) {
  Node n;
  n.op = Op::matmat;
  n.inputs = {a, b};
  n.value = kernels::matmat(value(a), value(b));
  return push(std::move(n), "matmat");
}

NodeId Tape::concat(std::span<const NodeId> parts) {
  std::vector<const Tensor*> ts;
  ts.reserve(parts.size());
  for (NodeId p : parts) ts.push_back(&value(p));
  Node n;
  n.op = Op::concat;
  n.inputs.assign(parts.begin(), parts.end());
  n.value = kernels::concat(ts);
  return push(std::move(n), "concat");
}

NodeId Tape::stack_rows(std::span<const NodeId> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t cols = value(rows.front()).size();
  Tensor out = Tensor::matrix(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = value(rows[r]);
    if (v.rank() != 1 || v.size() != cols)
      throw ShapeError("stack_rows: row " + std::to_string(r) + " has shape " + v.shape_string());
    std::copy(v.data().begin(), v.data().end(), out.row(r).begin());
  }
  Node n;
  n.op = Op::stack_rows;
  n.inputs.assign(rows.begin(), rows.end());
  n.value = std::move(out);
  return push(std::move(n), "stack_rows");
}

NodeId Tape::mean_rows(NodeId m) {
  Node n;
  n.op = Op::mean_rows;
  n.inputs = {m};
  n.value = kernels::mean_rows(value(m));
  return push(std::move(n), "mean_rows");
}

NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.op = Op::add;
  n.inputs = {a, b};
  n.value = kernels::add(value(a), value(b));
  return push(std::move(n), "add");
}

NodeId Tape::sigmoid(NodeId x) {
  Node n;
  n.op = Op::sigmoid;
  n.inputs = {x};
  n.value = kernels::sigmoid(value(x));
  return push(std::move(n), "sigmoid");
}

NodeId Tape::softmax(NodeId x) {
  Node n;
  n.op = Op::softmax;
  n.inputs = {x};
  n.value = kernels::softmax(value(x));
  return push(std::move(n), "softmax");
}

NodeId Tape::log_softmax_pick(NodeId logits, std::span<const std::size_t> picks) {
  const Tensor& x = value(logits);
  if (x.rank() != 1 || x.size() == 0) throw ShapeError("log_softmax_pick: expects a non-empty vector");
  const Scalar lse = kernels::log_sum_exp(x.data());
  Scalar total = 0;
  for (std::size_t p : picks) {
    if (p >= x.size()) throw ShapeError("log_softmax_pick: pick out of range");
    total += x[p] - lse;
  }
  Node n;
  n.op = Op::log_softmax_pick;
  n.inputs = {logits};
  n.picks.assign(picks.begin(), picks.end());
  n.value = Tensor::from({total});
  return push(std::move(n), "log_softmax_pick");
}

NodeId Tape::dot(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.rank() != 1 || !x.same_shape(y)) throw ShapeError("dot: incompatible shapes " + x.shape_string() + " and " + y.shape_string());
  Scalar acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  Node n;
  n.op = Op::dot;
  n.inputs = {a, b};
  n.value = Tensor::from({acc});
  return push(std::move(n), "dot");
}

NodeId Tape::sum(NodeId x) {
  Scalar acc = 0;
  for (Scalar v : value(x).data()) acc += v;
  Node n;
  n.op = Op::sum;
  n.inputs = {x};
  n.value = Tensor::from({acc});
  return push(std::move(n), "sum");
}

NodeId Tape::scale(NodeId x, Scalar k) {
  Node n;
  n.op = Op::scale;
  n.inputs = {x};
  n.k = k;
  n.value = value(x);
  for (auto& v : n.value.data()) v *= k;
  return push(std::move(n), "scale");
}

Tensor& Tape::ensure_grad(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !value(id).empty()) {
    n.grad = value(id);
    n.grad.fill(0);
  }
  return n.grad;
}

void Tape::backward(NodeId root, GradBuffer& grads, Scalar seed) {
  if (value(root).size() != 1) throw ShapeError("backward: root must be a scalar");
  ensure_grad(root)[0] += seed;
  for (std::size_t i = root + 1; i-- > 0;) {
    if (nodes_[i].grad.empty()) continue;
    backward_node(static_cast<NodeId>(i), grads);
  }
}

void Tape::backward_node(NodeId id, GradBuffer& grads) {
  // Copy the op data we need up front: ensure_grad on inputs never
  // reallocates nodes_, but keep references short-lived anyway.
  const Op op = nodes_[id].op;
  const Tensor& dy = nodes_[id].grad;
  switch (op) {
    case Op::constant:
      break;
    case Op::param: {
      add_into(grads.dense(nodes_[id].param), dy);
      break;
    }
    case Op::lookup: {
      auto row = grads.table_row(nodes_[id].param, nodes_[id].row);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += dy[c];
      break;
    }
    case Op::matvec: {
      const NodeId m = nodes_[id].inputs[0], x = nodes_[id].inputs[1];
      const Tensor& mv = value(m);
      const Tensor& xv = value(x);
      Tensor& dm = ensure_grad(m);
      Tensor& dx = ensure_grad(x);
      for (std::size_t r = 0; r < mv.rows(); ++r) {
        const Scalar g = dy[r];
        if (g == 0) continue;
        auto mr = mv.row(r);
        auto dmr = dm.row(r);
        for (std::size_t c = 0; c < mv.cols(); ++c) {
          dmr[c] += g * xv[c];
          dx[c] += g * mr[c];
        }
      }
      break;
    }
    case Op::matmat: {
      const NodeId a = nodes_[id].inputs[0], b = nodes_[id].inputs[1];
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      Tensor& da = ensure_grad(a);
      Tensor& db = ensure_grad(b);
      const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
      for (std::size_t i = 0; i < m; ++i) {
        auto dyi = dy.row(i);
        auto ai = av.row(i);
        auto dai = da.row(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
          auto bk = bv.row(kk);
          auto dbk = db.row(kk);
          Scalar acc = 0;
          const Scalar aik = ai[kk];
          for (std::size_t j = 0; j < n; ++j) {
            acc += dyi[j] * bk[j];
            dbk[j] += aik * dyi[j];
          }
          dai[kk] += acc;
        }
      }
      break;
    }
    case Op::concat: {
      std::size_t offset = 0;
      const auto inputs = nodes_[id].inputs;
      for (NodeId in : inputs) {
        Tensor& g = ensure_grad(in);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[offset + i];
        offset += g.size();
      }
      break;
    }
    case Op::stack_rows: {
      const auto inputs = nodes_[id].inputs;
      for (std::size_t r = 0; r < inputs.size(); ++r) {
        Tensor& g = ensure_grad(inputs[r]);
        auto src = dy.row(r);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] += src[c];
      }
      break;
    }
    case Op::mean_rows: {
      const NodeId m = nodes_[id].inputs[0];
      Tensor& g = ensure_grad(m);
      const Scalar inv = Scalar(1) / static_cast<Scalar>(g.rows());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += dy[c] * inv;
      }
      break;
    }
    case Op::add: {
      add_into(ensure_grad(nodes_[id].inputs[0]), dy);
      add_into(ensure_grad(nodes_[id].inputs[1]), dy);
      break;
    }
    case Op::sigmoid: {
      const Tensor& y = nodes_[id].value;
      Tensor& g = ensure_grad(nodes_[id].inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * y[i] * (1 - y[i]);
      break;
    }
    case Op::softmax: {
      const Tensor& y = nodes_[id].value;
      Scalar inner = 0;
      for (std::size_t i = 0; i < y.size(); ++i) inner += dy[i] * y[i];
      Tensor& g = ensure_grad(nodes_[id].inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += y[i] * (dy[i] - inner);
      break;
    }
    case Op::log_softmax_pick: {
      const NodeId x = nodes_[id].inputs[0];
      const Tensor p = kernels::softmax(value(x));
      const Scalar g0 = dy[0];
      Tensor& g = ensure_grad(x);
      const auto count = static_cast<Scalar>(nodes_[id].picks.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= g0 * count * p[i];
      for (std::size_t pick : nodes_[id].picks) g[pick] += g0;
      break;
    }
    case Op::dot: {
      const NodeId a = nodes_[id].inputs[0], b = nodes_[id].inputs[1];
      const Scalar g0 = dy[0];
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      Tensor& da = ensure_grad(a);
      Tensor& db = ensure_grad(b);
      for (std::size_t i = 0; i < av.size(); ++i) {
        da[i] += g0 * bv[i];
        db[i] += g0 * av[i];
      }
      break;
    }
    case Op::sum: {
      Tensor& g = ensure_grad(nodes_[id].inputs[0]);
      for (auto& v : g.data()) v += dy[0];
      break;
    }
    case Op::scale: {
      Tensor& g = ensure_grad(nodes_[id].inputs[0]);
      const Scalar k = nodes_[id].k;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * dy[i];
      break;
    }
  }
}

}  // namespace cogkr
