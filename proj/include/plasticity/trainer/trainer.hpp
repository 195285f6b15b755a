#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/activations/activation.hpp"
#include "plasticity/benchmarks/task_stream.hpp"
#include "plasticity/metrics/metrics.hpp"
#include "plasticity/models/model.hpp"

namespace plasticity {

enum class Method { baseline, adalin, crelu, fourier, deep_linear, scratch, shrink_perturb, l2 };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct InterventionConfig {
  double shrink_p = 1.0 - 1e-4;
  double noise_sigma = 1e-2;
  double l2_lambda = 0.01;
  bool sp_include_alpha = true;
  bool l2_include_alpha = false;

  friend bool operator==(const InterventionConfig&, const InterventionConfig&) = default;
};

struct RunConfig {
  BenchmarkKind benchmark = BenchmarkKind::random_label_mnist;
  StreamOverrides overrides;  // overrides.batch is the batch size
  Method method = Method::baseline;
  BaseKind base = BaseKind::relu;
  GateKind gate = GateKind::cosine;
  Granularity granularity = Granularity::neuron;
  double lr = 1e-2;
  std::vector<std::uint64_t> seeds{0};
  InterventionConfig intervention;
  std::size_t probe_cap = 2048;
  double srank_delta = kDefaultSrankDelta;
  bool metrics = true;  // snapshot at every task boundary

  // Activation used by the network for this method.
  ActivationSpec activation_spec() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Sample shape and class count of the benchmark's standard base dataset.
Shape benchmark_sample_shape(BenchmarkKind kind);
int benchmark_classes(BenchmarkKind kind);

// MLP for every benchmark except class-split, which uses the CNN.
Model build_model(const RunConfig& config, const Shape& sample_shape, int num_classes, Rng& rng);
Model build_model(const RunConfig& config, const Dataset& sample_source, Rng& rng);

struct TrainOptions {
  float lr = 1e-2f;
  double l2_lambda = 0.0;
  bool l2_include_alpha = false;
};

/// Online training over one task. For every batch the accuracy is taken
/// from the logits before the update, then loss, backward, optional L2
/// term and an SGD step follow. lr == 0 leaves the parameters untouched.
/// Returns the per-batch accuracies a_j (epochs * ceil(N / batch) of them).
/// Throws NonFiniteError when the loss stops being finite.
std::vector<double> train_task(Model& model, const TaskSpec& task, const TrainOptions& options);

// (1/M) sum a_j. Throws std::invalid_argument on an empty sequence.
double avg_online_accuracy(std::span<const double> accuracies);

// theta <- p * theta + sigma * eps for trainable parameters.
void shrink_and_perturb(Model& model, double p, double sigma, Rng& rng, bool include_alpha = true);
// Fresh draw of every parameter with the build-time scheme.
void scratch_reset(Model& model, Rng& rng);
// grad += lambda * theta for weights and biases (alphas too if asked).
void l2_gradient(Model& model, double lambda, bool include_alpha = false);

// Fraction of rows whose argmax matches the label; ties go to the lowest index.
double accuracy(const Tensor& logits, std::span<const int> labels);
// Accuracy of predict() over the whole view, in chunks.
double evaluate(const Model& model, const TaskSpec& view, std::size_t chunk = 512);

struct TaskResult {
  std::size_t task = 0;
  double avg_online_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<MetricSnapshot> metrics;
  std::vector<double> batch_acc;

  friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<TaskResult> tasks;
  // Set when training stopped on a non-finite loss.
  std::optional<std::string> failure;
  std::optional<std::size_t> failed_task;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Trains one seed over the whole task sequence. Interventions that need
/// task boundaries (scratch, shrink & perturb) act before every task after
/// the first. Other errors are rethrown as std::runtime_error carrying the
/// task index. The trained model is moved into model_out when given.
RunRecord continual_run(const RunConfig& config, const BenchmarkData& data, std::uint64_t seed,
                        std::optional<Model>* model_out = nullptr);

}  // namespace plasticity
