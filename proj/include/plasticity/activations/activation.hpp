#pragma once

#include <cstddef>
#include <string_view>
#include <utility>

namespace plasticity {

enum class BaseKind { relu, tanh, gelu, identity };

/// How the injected linear term is gated.
/// cosine, linear and quadratic are AdaLin gates; none is the ungated
/// ablation phi(x) + a*x; interpolation is a*x + (1 - a)*phi(x) with
/// a = sigmoid(raw).
enum class GateKind { cosine, linear, quadratic, none, interpolation };

enum class Granularity { neuron, layer, network };

enum class ActivationKind { plain, adalin, crelu, fourier };

std::string_view to_string(BaseKind kind);
std::string_view to_string(GateKind kind);
std::string_view to_string(Granularity kind);
std::string_view to_string(ActivationKind kind);
BaseKind parse_base_kind(std::string_view text);
GateKind parse_gate_kind(std::string_view text);
Granularity parse_granularity(std::string_view text);

struct ActivationSpec {
  ActivationKind kind = ActivationKind::plain;
  BaseKind base = BaseKind::relu;
  GateKind gate = GateKind::cosine;
  Granularity granularity = Granularity::neuron;

  bool has_alpha() const { return kind == ActivationKind::adalin; }
  // CReLU and Fourier emit two values per unit.
  std::size_t width_factor() const {
    return kind == ActivationKind::crelu || kind == ActivationKind::fourier ? 2 : 1;
  }

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

double phi(BaseKind base, double x);
// ReLU's derivative at 0 is taken as 1, so the gate closes at x = 0.
double phi_prime(BaseKind base, double x);
// 1 for relu, tanh and identity; 1.12 for gelu.
double lipschitz_constant(BaseKind base);

// Gate as a function of r = |phi'(x)| / L, with r clamped to [0, 1].
double gate_from_ratio(GateKind gate, double ratio);
// Throws std::invalid_argument for GateKind::none and GateKind::interpolation.
double gate_eval(GateKind gate, BaseKind base, double x);

struct ActivationGrad {
  double dx;
  double dalpha;
};

// f(x) = phi(x) + alpha * x * g(x), with g held constant when differentiating.
double adalin_forward(BaseKind base, GateKind gate, double alpha, double x);
ActivationGrad adalin_backward(BaseKind base, GateKind gate, double alpha, double x, double upstream);

// f(x) = phi(x) + alpha * x
double ungated_forward(BaseKind base, double alpha, double x);
ActivationGrad ungated_backward(BaseKind base, double alpha, double x, double upstream);

// f(x) = a * x + (1 - a) * phi(x), a = sigmoid(raw_alpha); dalpha is w.r.t. raw_alpha.
double sigmoid(double x);
double interpolation_forward(BaseKind base, double raw_alpha, double x);
ActivationGrad interpolation_backward(BaseKind base, double raw_alpha, double x, double upstream);

// (relu(x), relu(-x))
std::pair<double, double> crelu_forward(double x);
// (sin z, cos z)
std::pair<double, double> fourier_forward(double z);

}  // namespace plasticity
