#include "plasticity/metrics/metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace {

// (units, inner) for a tensor whose axis 1 holds units.
std::pair<std::size_t, std::size_t> unit_layout(const Tensor& t) {
  if (t.rank() < 2) throw ShapeError("activation tensor needs a batch and a unit axis, got " + to_string(t.shape()));
  std::size_t inner = 1;
  for (std::size_t d = 2; d < t.rank(); ++d) inner *= t.dim(d);
  return {t.dim(1), inner};
}

}  // namespace

double binary_entropy_bits(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

std::vector<double> positive_fraction(const Tensor& post) {
  const auto [units, inner] = unit_layout(post);
  const std::size_t batch = post.dim(0);
  if (batch == 0 || inner == 0) throw std::invalid_argument("positive_fraction: no samples");
  std::vector<std::size_t> positive(units, 0);
  const float* v = post.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t u = 0; u < units; ++u) {
      const float* row = v + (b * units + u) * inner;
      for (std::size_t i = 0; i < inner; ++i) positive[u] += row[i] > 0.0f;
    }
  }
  std::vector<double> out(units);
  const double n = static_cast<double>(batch * inner);
  for (std::size_t u = 0; u < units; ++u) out[u] = static_cast<double>(positive[u]) / n;
  return out;
}

double sign_entropy(std::span<const Tensor> post_activations) {
  double total = 0.0;
  std::size_t units = 0;
  for (const Tensor& t : post_activations) {
    for (double p : positive_fraction(t)) {
      total += binary_entropy_bits(p);
      ++units;
    }
  }
  if (units == 0) throw std::invalid_argument("sign_entropy: empty probe");
  return total / static_cast<double>(units);
}

double weight_norm(const Model& model) {
  double sq = 0.0;
  for (const Parameter* p : model.parameters()) {
    if (p->role == ParamRole::alpha) continue;
    sq += p->value.squared_norm();
  }
  return std::sqrt(sq);
}

std::vector<double> singular_values(std::span<const float> values, std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) throw ShapeError("matrix data does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

int srank(std::span<const float> values, std::size_t rows, std::size_t cols, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("srank delta must lie in (0, 1]");
  const auto s = singular_values(values, rows, cols);
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("srank of an all-zero matrix");
  double mass = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    mass += s[k];
    if (mass / total >= delta) return static_cast<int>(k + 1);
  }
  return static_cast<int>(s.size());
}

int srank(const Tensor& matrix, double delta) {
  if (matrix.rank() != 2) throw ShapeError("srank expects a matrix, got " + to_string(matrix.shape()));
  return srank(matrix.values(), matrix.dim(0), matrix.dim(1), delta);
}

int srank(const WeightMatrix& matrix, double delta) {
  return srank(matrix.values->values(), matrix.rows, matrix.cols, delta);
}

std::vector<std::vector<double>> saturation_profile(std::span<const Tensor> pre_activations, BaseKind base) {
  std::vector<std::vector<double>> out;
  out.reserve(pre_activations.size());
  for (const Tensor& t : pre_activations) {
    const auto [units, inner] = unit_layout(t);
    const std::size_t batch = t.dim(0);
    std::vector<double> sum(units, 0.0);
    const float* v = t.data();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t u = 0; u < units; ++u) {
        const float* row = v + (b * units + u) * inner;
        for (std::size_t i = 0; i < inner; ++i) sum[u] += gate_eval(GateKind::cosine, base, row[i]);
      }
    }
    const double n = static_cast<double>(batch * inner);
    for (double& s : sum) s = n > 0 ? s / n : 0.0;
    out.push_back(std::move(sum));
  }
  return out;
}

std::vector<std::vector<double>> saturation_profile(const Model& model, const Tensor& probe) {
  ForwardTrace trace;
  model.predict(probe, &trace);
  return saturation_profile(trace.pre, model.activation().base);
}

double MetricSnapshot::srank_mean() const {
  if (srank_per_layer.empty()) return 0.0;
  double s = 0.0;
  for (int r : srank_per_layer) s += r;
  return s / static_cast<double>(srank_per_layer.size());
}

bool MetricSnapshot::all_finite() const {
  if (!std::isfinite(sign_entropy_mean) || !std::isfinite(weight_norm)) return false;
  for (const auto* group : {&saturation, &alpha}) {
    for (const auto& layer : *group) {
      for (double v : layer) {
        if (!std::isfinite(v)) return false;
      }
    }
  }
  return true;
}

MetricSnapshot take_snapshot(const Model& model, const Tensor& probe, std::size_t task_index, double srank_delta) {
  MetricSnapshot snap;
  snap.task_index = task_index;
  ForwardTrace trace;
  model.predict(probe, &trace);
  snap.sign_entropy_mean = trace.post.empty() ? 0.0 : sign_entropy(trace.post);
  snap.weight_norm = weight_norm(model);
  for (const WeightMatrix& w : model.weight_matrices()) {
    const bool zero = std::all_of(w.values->values().begin(), w.values->values().end(),
                                  [](float x) { return x == 0.0f; });
    snap.srank_per_layer.push_back(zero ? 0 : srank(w, srank_delta));
  }
  snap.saturation = saturation_profile(trace.pre, model.activation().base);
  if (const AlphaStore* alphas = model.alphas()) {
    for (std::size_t l = 0; l < alphas->layout().layers(); ++l) {
      const auto v = alphas->layer_param(l).value.values();
      snap.alpha.emplace_back(v.begin(), v.end());
    }
  }
  return snap;
}

std::vector<AlphaRow> alpha_snapshot(const Model& model, const std::vector<std::vector<double>>& saturation) {
  const AlphaStore* alphas = model.alphas();
  if (alphas == nullptr || alphas->layout().granularity() != Granularity::neuron) {
    throw ConfigError("alpha_snapshot needs neuron-granularity alphas");
  }
  std::vector<AlphaRow> rows;
  const auto& layers = model.activated_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].alpha_layer) continue;
    if (l >= saturation.size() || saturation[l].size() != layers[l].units) {
      throw ShapeError("saturation profile does not match activated layer " + std::to_string(l));
    }
    const auto& key = saturation[l];
    std::vector<std::size_t> order(layers[l].units);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t n = order[r];
      rows.push_back({l, n, r, alphas->resolve(*layers[l].alpha_layer, n), key[n]});
    }
  }
  return rows;
}

}  // namespace plasticity
