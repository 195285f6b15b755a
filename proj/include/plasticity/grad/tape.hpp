#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "plasticity/grad/parameter.hpp"
#include "plasticity/tensor.hpp"

namespace plasticity {

enum class OpKind {
  constant,
  variable,
  parameter,
  add,
  sub,
  mul,
  neg,
  abs,
  cos,
  sin,
  exp,
  tanh,
  scale,
  sum,
  reshape,
  matmul,
  add_bias,
  conv2d,
  maxpool2d,
  softmax_cross_entropy,
  stop_gradient,
  activation,
};

std::string_view to_string(OpKind kind);

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a backward rule sees. input_grads[i] is null when input i does not
/// need a gradient, so rules can skip that work.
struct BackwardArgs {
  const Tensor& upstream;
  const Tensor& output;
  std::span<const Tensor* const> inputs;
  std::span<Tensor* const> input_grads;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

struct Node {
  OpKind op = OpKind::constant;
  std::vector<std::size_t> inputs;
  Tensor value;
  Tensor grad;
  bool stop_grad = false;
  bool requires_grad = false;
  Parameter* param = nullptr;
  BackwardFn backward;
};

/// Reverse-mode gradient tape. One tape per thread of work; nothing here is
/// shared between tapes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A value that never receives a gradient (inputs, labels).
  Var constant(Tensor value);
  // A free leaf whose gradient is kept on the node (used by tests).
  Var variable(Tensor value);
  // A leaf bound to a Parameter; backward() adds into param.grad.
  Var parameter(Parameter& param);

  // Record an op. Throws NonFiniteError if value holds NaN or Inf.
  Var record(OpKind op, std::span<const Var> inputs, Tensor value, BackwardFn backward);
  // Forward identity whose backward contributes nothing.
  Var stop_gradient(Var x);

  // Seeds d(root)/d(root) = 1 and propagates to every node. Node gradients
  // are recomputed from zero on each call; Parameter gradients accumulate.
  void backward(Var root);

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  friend class Var;
  std::deque<Node> nodes_;
};

}  // namespace plasticity
