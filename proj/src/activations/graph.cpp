#include "plasticity/activations/graph.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace {

struct UnitGeometry {
  std::size_t batch;
  std::size_t units;
  std::size_t inner;  // spatial positions per unit and sample
};

UnitGeometry geometry_of(const Tensor& t) {
  if (t.rank() < 2) throw ShapeError("activation input needs a batch and a unit axis, got " + to_string(t.shape()));
  UnitGeometry g{t.dim(0), t.dim(1), 1};
  for (std::size_t a = 2; a < t.rank(); ++a) g.inner *= t.dim(a);
  return g;
}

Var plain(Var pre, BaseKind base) {
  const Tensor& x = pre.value();
  Tensor out(x.shape());
  auto deriv = std::make_shared<std::vector<float>>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>(phi(base, x[i]));
    (*deriv)[i] = static_cast<float>(phi_prime(base, x[i]));
  }
  const Var inputs[] = {pre};
  return pre.tape().record(OpKind::activation, inputs, std::move(out), [deriv](const BackwardArgs& args) {
    Tensor* gx = args.input_grads[0];
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += args.upstream[i] * (*deriv)[i];
  });
}

Var with_alpha(Var pre, const ActivationSpec& spec, Var alpha) {
  const Tensor& x = pre.value();
  const Tensor& a = alpha.value();
  const UnitGeometry geo = geometry_of(x);
  if (a.size() != 1 && a.size() != geo.units) {
    throw ShapeError("alpha of size " + std::to_string(a.size()) + " for " + std::to_string(geo.units) + " units");
  }
  const bool shared = a.size() == 1;
  const BaseKind base = spec.base;
  const GateKind gate = spec.gate;

  // Per element: local derivative d f / d x and d f / d alpha.
  auto dfdx = std::make_shared<std::vector<float>>(x.size());
  auto dfda = std::make_shared<std::vector<double>>(x.size());
  Tensor out(x.shape());
  for (std::size_t b = 0; b < geo.batch; ++b) {
    for (std::size_t u = 0; u < geo.units; ++u) {
      const double av = a[shared ? 0 : u];
      const std::size_t start = (b * geo.units + u) * geo.inner;
      for (std::size_t i = start; i < start + geo.inner; ++i) {
        const double xv = x[i];
        ActivationGrad grad{};
        double f = 0.0;
        switch (gate) {
          case GateKind::none:
            f = ungated_forward(base, av, xv);
            grad = ungated_backward(base, av, xv, 1.0);
            break;
          case GateKind::interpolation:
            f = interpolation_forward(base, av, xv);
            grad = interpolation_backward(base, av, xv, 1.0);
            break;
          default:
            f = adalin_forward(base, gate, av, xv);
            grad = adalin_backward(base, gate, av, xv, 1.0);
            break;
        }
        out[i] = static_cast<float>(f);
        (*dfdx)[i] = static_cast<float>(grad.dx);
        (*dfda)[i] = grad.dalpha;
      }
    }
  }
  const Var inputs[] = {pre, alpha};
  return pre.tape().record(OpKind::activation, inputs, std::move(out), [geo, shared, dfdx, dfda](const BackwardArgs& args) {
    const Tensor& up = args.upstream;
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < up.size(); ++i) (*gx)[i] += up[i] * (*dfdx)[i];
    }
    if (Tensor* ga = args.input_grads[1]) {
      std::vector<double> acc(shared ? 1 : geo.units, 0.0);
      for (std::size_t b = 0; b < geo.batch; ++b)
        for (std::size_t u = 0; u < geo.units; ++u) {
          const std::size_t start = (b * geo.units + u) * geo.inner;
          double s = 0.0;
          for (std::size_t i = start; i < start + geo.inner; ++i) s += double(up[i]) * (*dfda)[i];
          acc[shared ? 0 : u] += s;
        }
      for (std::size_t k = 0; k < acc.size(); ++k) (*ga)[k] += static_cast<float>(acc[k]);
    }
  });
}

// CReLU and Fourier: two outputs per unit, stacked along axis 1.
template <class Pair, class PairDeriv>
Var doubled(Var pre, Pair pair, PairDeriv pair_deriv) {
  const Tensor& x = pre.value();
  const UnitGeometry geo = geometry_of(x);
  Shape shape = x.shape();
  shape[1] *= 2;
  Tensor out(shape);
  const std::size_t block = geo.units * geo.inner;
  for (std::size_t b = 0; b < geo.batch; ++b) {
    for (std::size_t i = 0; i < block; ++i) {
      const auto [first, second] = pair(double(x[b * block + i]));
      out[2 * b * block + i] = static_cast<float>(first);
      out[2 * b * block + block + i] = static_cast<float>(second);
    }
  }
  const Var inputs[] = {pre};
  return pre.tape().record(OpKind::activation, inputs, std::move(out), [geo, block, pair_deriv](const BackwardArgs& args) {
    Tensor* gx = args.input_grads[0];
    if (gx == nullptr) return;
    const Tensor& x = *args.inputs[0];
    for (std::size_t b = 0; b < geo.batch; ++b) {
      for (std::size_t i = 0; i < block; ++i) {
        const auto [d1, d2] = pair_deriv(double(x[b * block + i]));
        const double g = args.upstream[2 * b * block + i] * d1 + args.upstream[2 * b * block + block + i] * d2;
        (*gx)[b * block + i] += static_cast<float>(g);
      }
    }
  });
}

}  // namespace

Var activate(Var pre, const ActivationSpec& spec, std::optional<Var> alpha) {
  switch (spec.kind) {
    case ActivationKind::plain:
      return plain(pre, spec.base);
    case ActivationKind::adalin:
      if (!alpha) throw std::invalid_argument("adalin activation needs an alpha input");
      return with_alpha(pre, spec, *alpha);
    case ActivationKind::crelu:
      return doubled(pre, crelu_forward, [](double v) {
        return std::pair<double, double>{v < 0.0 ? 0.0 : 1.0, v <= 0.0 ? -1.0 : 0.0};
      });
    case ActivationKind::fourier:
      return doubled(pre, fourier_forward, [](double v) {
        return std::pair<double, double>{std::cos(v), -std::sin(v)};
      });
  }
  throw std::logic_error("unhandled activation kind");
}

}  // namespace plasticity
