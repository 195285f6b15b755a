#include "plasticity/grad/sgd.hpp"

#include <stdexcept>
#include <string>

namespace plasticity {

void sgd_step(std::span<Parameter* const> params, float lr) {
  if (!(lr > 0.0f)) throw std::invalid_argument("sgd_step: learning rate must be positive, got " + std::to_string(lr));
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    auto value = p->value.values();
    auto grad = p->grad.values();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace plasticity
