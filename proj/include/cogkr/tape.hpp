#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cogkr/parameters.hpp"
#include "cogkr/tensor.hpp"

namespace cogkr {

using NodeId = std::uint32_t;

// Reverse-mode recording of tensor primitives. Every op appends a node with
// its forward value; backward() replays the list in reverse applying each
// primitive's manual rule. Parameter leaves alias the store (no copies) and
// their gradients land in a caller-owned GradBuffer.
//
// A tape is single-owner: one episode, one thread.
class Tape {
 public:
  explicit Tape(const ParameterStore& params);

  const ParameterStore& params() const { return *params_; }

  NodeId param(ParamId id);
  NodeId constant(Tensor value);
  // Row `row` of a table parameter, as a vector.
  NodeId lookup(ParamId table, std::size_t row);

  NodeId matvec(NodeId m, NodeId x);
  NodeId matmat(NodeId a, NodeId b);
  NodeId concat(std::span<const NodeId> parts);
  NodeId stack_rows(std::span<const NodeId> rows);
  NodeId mean_rows(NodeId m);
  NodeId add(NodeId a, NodeId b);
  NodeId sigmoid(NodeId x);
  NodeId softmax(NodeId x);
  // Scalar sum over `picks` of log softmax(logits)[pick]. Repeated picks count
  // repeatedly.
  NodeId log_softmax_pick(NodeId logits, std::span<const std::size_t> picks);
  NodeId dot(NodeId a, NodeId b);
  NodeId sum(NodeId x);
  NodeId scale(NodeId x, Scalar k);

  const Tensor& value(NodeId id) const;
  Scalar scalar(NodeId id) const { return value(id)[0]; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep seeded with d(root) = seed. May be called once per tape.
  void backward(NodeId root, GradBuffer& grads, Scalar seed = 1);
  // Gradient reaching a node in the last backward sweep (empty if none).
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

 private:
  enum class Op : std::uint8_t {
    param,
    constant,
    lookup,
    matvec,
    matmat,
    concat,
    stack_rows,
    mean_rows,
    add,
    sigmoid,
    softmax,
    log_softmax_pick,
    dot,
    sum,
    scale,
  };

  struct Node {
    Op op = Op::constant;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;
    const Tensor* alias = nullptr;
    ParamId param = 0;
    std::size_t row = 0;
    Scalar k = 0;
    std::vector<std::size_t> picks;
  };

  NodeId push(Node node, const char* op_name);
  Tensor& ensure_grad(NodeId id);
  void backward_node(NodeId id, GradBuffer& grads);

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::vector<NodeId> param_nodes_;
};

}  // namespace cogkr
