#pragma once

#include <string>
#include <string_view>

#include "plasticity/tensor.hpp"

namespace plasticity {

enum class ParamRole { weight, bias, alpha };

std::string_view to_string(ParamRole role);
ParamRole parse_param_role(std::string_view text);

/// A trainable tensor plus its accumulated gradient.
struct Parameter {
  Parameter(std::string name, Tensor value, ParamRole role, bool trainable = true)
      : name(std::move(name)),
        value(std::move(value)),
        grad(this->value.shape()),
        role(role),
        trainable(trainable) {}

  void zero_grad() { grad.fill(0.0f); }

  std::string name;
  Tensor value;
  Tensor grad;
  ParamRole role;
  bool trainable;
};

}  // namespace plasticity
