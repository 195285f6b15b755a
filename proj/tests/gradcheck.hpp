#pragma once

#include <functional>
#include <vector>

#include "plasticity/grad/ops.hpp"
#include "plasticity/grad/tape.hpp"
#include "support.hpp"

namespace test_support {

using Builder = std::function<plasticity::Var(plasticity::Tape&, const std::vector<plasticity::Var>&)>;

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Central differences of a scalar-valued graph against tape gradients, for
// every element of every input. The engine stores float32, so with h = 1e-3
// the difference quotient carries ~1e-4 of rounding noise; the relative
// error uses max(|a|, |b|, floor) as its denominator to keep tiny
// gradients from turning that noise into large ratios.
inline GradCheck gradient_check(const Builder& build, std::vector<plasticity::Tensor> inputs, double h = 1e-3,
                                double floor = 1e-1) {
  using namespace plasticity;
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    tape.backward(build(tape, vars));
    for (const Var& v : vars) analytic.push_back(v.grad());
  }
  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : xs) vars.push_back(tape.constant(t));
    return static_cast<double>(build(tape, vars).value().item());
  };
  GradCheck out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const float x0 = inputs[k][i];
      inputs[k][i] = static_cast<float>(x0 + h);
      const double up = eval(inputs);
      inputs[k][i] = static_cast<float>(x0 - h);
      const double down = eval(inputs);
      inputs[k][i] = x0;
      const double numeric = (up - down) / (2.0 * h);
      out.max_rel = std::max(out.max_rel, rel_err(analytic[k][i], numeric, floor));
      ++out.checked;
    }
  }
  return out;
}

// sum(x * w) for a fixed random w, so every element of x gets a distinct
// upstream gradient.
inline plasticity::Var weighted_sum(plasticity::Var x, std::uint64_t seed = 99) {
  using namespace plasticity;
  Rng rng(seed);
  Tensor w = random_tensor(x.shape(), rng);
  return sum(mul(x, x.tape().constant(std::move(w))));
}

}  // namespace test_support
