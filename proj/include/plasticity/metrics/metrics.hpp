#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "plasticity/activations/activation.hpp"
#include "plasticity/models/model.hpp"
#include "plasticity/tensor.hpp"

namespace plasticity {

constexpr double kDefaultSrankDelta = 0.99;

// Bits; p is clamped to [1e-12, 1 - 1e-12].
double binary_entropy_bits(double p);

// Fraction of strictly positive values per unit of a (B x units x ...)
// tensor. Extra axes count as more samples of the same unit.
std::vector<double> positive_fraction(const Tensor& post);

/// Mean over every unit of every layer of the binary entropy of its
/// positive fraction. Throws std::invalid_argument when there are no units
/// or no samples.
double sign_entropy(std::span<const Tensor> post_activations);

// Euclidean norm over weights and biases; alphas are left out.
double weight_norm(const Model& model);

/// Smallest k whose top-k singular values hold at least delta of the total
/// singular-value mass. Throws std::invalid_argument on an all-zero matrix.
int srank(std::span<const float> values, std::size_t rows, std::size_t cols, double delta = kDefaultSrankDelta);
int srank(const Tensor& matrix, double delta = kDefaultSrankDelta);
int srank(const WeightMatrix& matrix, double delta = kDefaultSrankDelta);

// Singular values in descending order.
std::vector<double> singular_values(std::span<const float> values, std::size_t rows, std::size_t cols);

// Mean cosine gate of the base activation over every (sample, position) of
// each unit, one vector per layer.
std::vector<std::vector<double>> saturation_profile(std::span<const Tensor> pre_activations, BaseKind base);
std::vector<std::vector<double>> saturation_profile(const Model& model, const Tensor& probe);

struct MetricSnapshot {
  std::size_t task_index = 0;
  double sign_entropy_mean = 0.0;
  double weight_norm = 0.0;
  std::vector<int> srank_per_layer;
  std::vector<std::vector<double>> saturation;  // per activated layer, per unit
  std::vector<std::vector<double>> alpha;       // per alpha layer, per unit; empty without alphas

  double srank_mean() const;
  bool all_finite() const;
  friend bool operator==(const MetricSnapshot&, const MetricSnapshot&) = default;
};

/// Every metric on one probe batch. Reads the model only.
MetricSnapshot take_snapshot(const Model& model, const Tensor& probe, std::size_t task_index,
                             double srank_delta = kDefaultSrankDelta);

struct AlphaRow {
  std::size_t layer = 0;   // activated-layer index
  std::size_t neuron = 0;  // unit within the layer
  std::size_t rank = 0;    // position after sorting by saturation
  double alpha = 0.0;
  double saturation = 0.0;
};

/// Rows of (alpha, saturation) per layer, each layer ordered by ascending
/// saturation (ties by neuron index). saturation[l][i] is the sort key for
/// neuron i of activated layer l, typically averaged over the run. Requires
/// neuron-granularity alphas; throws ConfigError otherwise.
std::vector<AlphaRow> alpha_snapshot(const Model& model, const std::vector<std::vector<double>>& saturation);

}  // namespace plasticity
