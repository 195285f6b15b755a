#pragma once

#include <span>

#include "plasticity/grad/parameter.hpp"

namespace plasticity {

inline constexpr float kDefaultLearningRate = 1e-2f;

// theta <- theta - lr * grad for every trainable parameter. Plain SGD: no
// momentum, no weight decay. Throws std::invalid_argument unless lr > 0.
void sgd_step(std::span<Parameter* const> params, float lr);

void zero_grads(std::span<Parameter* const> params);

}  // namespace plasticity
