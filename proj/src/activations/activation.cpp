#include "plasticity/activations/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace plasticity {

std::string_view to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::relu: return "relu";
    case BaseKind::tanh: return "tanh";
    case BaseKind::gelu: return "gelu";
    case BaseKind::identity: return "identity";
  }
  return "?";
}

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::cosine: return "cosine";
    case GateKind::linear: return "linear";
    case GateKind::quadratic: return "quadratic";
    case GateKind::none: return "none";
    case GateKind::interpolation: return "interpolation";
  }
  return "?";
}

std::string_view to_string(Granularity kind) {
  switch (kind) {
    case Granularity::neuron: return "neuron";
    case Granularity::layer: return "layer";
    case Granularity::network: return "network";
  }
  return "?";
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::plain: return "plain";
    case ActivationKind::adalin: return "adalin";
    case ActivationKind::crelu: return "crelu";
    case ActivationKind::fourier: return "fourier";
  }
  return "?";
}

BaseKind parse_base_kind(std::string_view text) {
  for (BaseKind k : {BaseKind::relu, BaseKind::tanh, BaseKind::gelu, BaseKind::identity}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown base activation '" + std::string(text) + "'");
}

GateKind parse_gate_kind(std::string_view text) {
  for (GateKind k : {GateKind::cosine, GateKind::linear, GateKind::quadratic, GateKind::none,
                     GateKind::interpolation}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown gate '" + std::string(text) + "'");
}

Granularity parse_granularity(std::string_view text) {
  for (Granularity k : {Granularity::neuron, Granularity::layer, Granularity::network}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown granularity '" + std::string(text) + "'");
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double phi(BaseKind base, double x) {
  switch (base) {
    case BaseKind::relu: return x < 0.0 ? 0.0 : x;
    case BaseKind::tanh: return std::tanh(x);
    case BaseKind::gelu: return x * normal_cdf(x);
    case BaseKind::identity: return x;
  }
  return x;
}

double phi_prime(BaseKind base, double x) {
  switch (base) {
    case BaseKind::relu: return x < 0.0 ? 0.0 : 1.0;
    case BaseKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case BaseKind::gelu: return normal_cdf(x) + x * normal_pdf(x);
    case BaseKind::identity: return 1.0;
  }
  return 1.0;
}

double lipschitz_constant(BaseKind base) { return base == BaseKind::gelu ? 1.12 : 1.0; }

double gate_from_ratio(GateKind gate, double ratio) {
  const double r = std::clamp(ratio, 0.0, 1.0);
  double g = 0.0;
  switch (gate) {
    case GateKind::cosine:
      // cos(pi/2 * r) written as sin(pi/2 * (1 - r)): exact 0 at r = 1 and 1 at r = 0
      g = std::sin(std::numbers::pi / 2.0 * (1.0 - r));
      break;
    case GateKind::linear: g = 1.0 - r; break;
    case GateKind::quadratic: g = 1.0 - r * r; break;
    case GateKind::none:
    case GateKind::interpolation:
      throw std::invalid_argument("gate_eval: '" + std::string(to_string(gate)) + "' has no gate function");
  }
  return std::clamp(g, 0.0, 1.0);
}

double gate_eval(GateKind gate, BaseKind base, double x) {
  return gate_from_ratio(gate, std::fabs(phi_prime(base, x)) / lipschitz_constant(base));
}

double adalin_forward(BaseKind base, GateKind gate, double alpha, double x) {
  return phi(base, x) + alpha * x * gate_eval(gate, base, x);
}

ActivationGrad adalin_backward(BaseKind base, GateKind gate, double alpha, double x, double upstream) {
  const double g = gate_eval(gate, base, x);
  return {(phi_prime(base, x) + alpha * g) * upstream, x * g * upstream};
}

double ungated_forward(BaseKind base, double alpha, double x) { return phi(base, x) + alpha * x; }

ActivationGrad ungated_backward(BaseKind base, double alpha, double x, double upstream) {
  return {(phi_prime(base, x) + alpha) * upstream, x * upstream};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double interpolation_forward(BaseKind base, double raw_alpha, double x) {
  const double a = sigmoid(raw_alpha);
  return a * x + (1.0 - a) * phi(base, x);
}

ActivationGrad interpolation_backward(BaseKind base, double raw_alpha, double x, double upstream) {
  const double a = sigmoid(raw_alpha);
  const double dx = (a + (1.0 - a) * phi_prime(base, x)) * upstream;
  const double da = (x - phi(base, x)) * a * (1.0 - a) * upstream;
  return {dx, da};
}

std::pair<double, double> crelu_forward(double x) { return {x < 0.0 ? 0.0 : x, x < 0.0 ? -x : 0.0}; }

std::pair<double, double> fourier_forward(double z) { return {std::sin(z), std::cos(z)}; }

}  // namespace plasticity
