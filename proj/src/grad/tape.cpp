#include "plasticity/grad/tape.hpp"

#include "plasticity/errors.hpp"

namespace plasticity {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::weight: return "weight";
    case ParamRole::bias: return "bias";
    case ParamRole::alpha: return "alpha";
  }
  return "?";
}

ParamRole parse_param_role(std::string_view text) {
  if (text == "weight") return ParamRole::weight;
  if (text == "bias") return ParamRole::bias;
  if (text == "alpha") return ParamRole::alpha;
  throw FormatError("unknown parameter role '" + std::string(text) + "'");
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::variable: return "variable";
    case OpKind::parameter: return "parameter";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::neg: return "neg";
    case OpKind::abs: return "abs";
    case OpKind::cos: return "cos";
    case OpKind::sin: return "sin";
    case OpKind::exp: return "exp";
    case OpKind::tanh: return "tanh";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
    case OpKind::reshape: return "reshape";
    case OpKind::matmul: return "matmul";
    case OpKind::add_bias: return "add_bias";
    case OpKind::conv2d: return "conv2d";
    case OpKind::maxpool2d: return "maxpool2d";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
    case OpKind::stop_gradient: return "stop_gradient";
    case OpKind::activation: return "activation";
  }
  return "?";
}

const Tensor& Var::value() const { return tape_->nodes_.at(id_).value; }
const Tensor& Var::grad() const { return tape_->nodes_.at(id_).grad; }

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.op = OpKind::constant;
  n.value = std::move(value);
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.op = OpKind::variable;
  n.value = std::move(value);
  n.requires_grad = true;
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& param) {
  Node& n = nodes_.emplace_back();
  n.op = OpKind::parameter;
  n.value = param.value;
  n.param = &param;
  n.requires_grad = param.trainable;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind op, std::span<const Var> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by ") + std::string(to_string(op)));
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.backward = std::move(backward);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw std::logic_error("Var from a different tape");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_.at(in.id()).requires_grad;
  }
  if (!n.backward) n.requires_grad = false;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::stop_gradient(Var x) {
  Node& n = nodes_.emplace_back();
  n.op = OpKind::stop_gradient;
  n.inputs = {x.id()};
  n.value = nodes_.at(x.id()).value;
  n.stop_grad = true;
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root) {
  const std::size_t root_id = root.id();
  if (nodes_.at(root_id).value.size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " +
                     to_string(nodes_.at(root_id).value.shape()));
  }
  for (std::size_t i = 0; i <= root_id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.grad = Tensor(n.value.shape());
    } else {
      n.grad = Tensor();
    }
  }
  if (!nodes_[root_id].requires_grad) return;
  nodes_[root_id].grad.fill(1.0f);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t i = root_id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.param != nullptr) {
      auto g = n.grad.values();
      auto dst = n.param->grad.values();
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
      continue;
    }
    if (!n.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : n.inputs) {
      Node& parent = nodes_[in];
      in_values.push_back(&parent.value);
      in_grads.push_back(parent.requires_grad ? &parent.grad : nullptr);
    }
    n.backward(BackwardArgs{n.grad, n.value, in_values, in_grads});
  }
}

}  // namespace plasticity
