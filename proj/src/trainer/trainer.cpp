#include "plasticity/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plasticity/errors.hpp"
#include "plasticity/grad/ops.hpp"
#include "plasticity/grad/sgd.hpp"

namespace plasticity {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::adalin: return "adalin";
    case Method::crelu: return "crelu";
    case Method::fourier: return "fourier";
    case Method::deep_linear: return "deep_linear";
    case Method::scratch: return "scratch";
    case Method::shrink_perturb: return "shrink_perturb";
    case Method::l2: return "l2";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::baseline, Method::adalin, Method::crelu, Method::fourier, Method::deep_linear,
                   Method::scratch, Method::shrink_perturb, Method::l2}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

ActivationSpec RunConfig::activation_spec() const {
  ActivationSpec spec;
  spec.base = base;
  spec.gate = gate;
  spec.granularity = granularity;
  switch (method) {
    case Method::adalin: spec.kind = ActivationKind::adalin; break;
    case Method::crelu: spec.kind = ActivationKind::crelu; break;
    case Method::fourier: spec.kind = ActivationKind::fourier; break;
    case Method::deep_linear:
      spec.kind = ActivationKind::plain;
      spec.base = BaseKind::identity;
      break;
    default: spec.kind = ActivationKind::plain; break;
  }
  return spec;
}

Shape benchmark_sample_shape(BenchmarkKind kind) {
  if (kind == BenchmarkKind::permuted_mnist || kind == BenchmarkKind::random_label_mnist) return {1, 28, 28};
  return {3, 32, 32};
}

int benchmark_classes(BenchmarkKind kind) { return kind == BenchmarkKind::class_split_cifar100 ? 100 : 10; }

Model build_model(const RunConfig& config, const Shape& shape, int num_classes, Rng& rng) {
  if (config.benchmark == BenchmarkKind::class_split_cifar100) {
    if (shape.size() != 3) throw ShapeError("CNN input must be (C x H x W), got " + to_string(shape));
    CnnSpec spec;
    spec.in_channels = shape[0];
    spec.height = shape[1];
    spec.width = shape[2];
    spec.output_dim = static_cast<std::size_t>(num_classes);
    spec.activation = config.activation_spec();
    return Model::cnn(spec, rng);
  }
  MlpSpec spec;
  spec.input_dim = numel(shape);
  spec.output_dim = static_cast<std::size_t>(num_classes);
  spec.activation = config.activation_spec();
  return Model::mlp(spec, rng);
}

Model build_model(const RunConfig& config, const Dataset& sample_source, Rng& rng) {
  return build_model(config, sample_source.sample_shape(), sample_source.num_classes, rng);
}

double accuracy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw ShapeError("accuracy: logits " + to_string(logits.shape()) + " vs " + std::to_string(labels.size()) +
                     " labels");
  }
  if (labels.empty()) return 0.0;
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const float* row = logits.data() + r * k;
    const auto best = static_cast<int>(std::max_element(row, row + k) - row);
    correct += best == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const Model& model, const TaskSpec& view, std::size_t chunk) {
  if (view.size() == 0) throw std::invalid_argument("evaluate: empty view");
  std::size_t correct = 0;
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < view.size(); start += chunk) {
    const std::size_t end = std::min(view.size(), start + chunk);
    positions.resize(end - start);
    std::iota(positions.begin(), positions.end(), start);
    const auto labels = view.gather_labels(positions);
    const double acc = accuracy(model.predict(view.gather_images(positions)), labels);
    correct += static_cast<std::size_t>(std::lround(acc * static_cast<double>(labels.size())));
  }
  return static_cast<double>(correct) / static_cast<double>(view.size());
}

void l2_gradient(Model& model, double lambda, bool include_alpha) {
  if (lambda == 0.0) return;
  for (Parameter* p : model.parameters()) {
    if (!p->trainable || (p->role == ParamRole::alpha && !include_alpha)) continue;
    auto g = p->grad.values();
    const auto v = p->value.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<float>(lambda * v[i]);
  }
}

std::vector<double> train_task(Model& model, const TaskSpec& task, const TrainOptions& options) {
  if (!(options.lr >= 0.0f)) throw std::invalid_argument("learning rate must be nonnegative");
  if (task.size() == 0) throw std::invalid_argument("train_task: empty task");
  std::vector<Parameter*> params = model.parameters();
  std::vector<double> acc;
  acc.reserve(task.total_batches());
  for (std::size_t e = 0; e < task.epochs; ++e) {
    const auto order = task.epoch_order(e);
    for (std::size_t start = 0; start < order.size(); start += task.batch_size) {
      const std::size_t end = std::min(order.size(), start + task.batch_size);
      const std::span<const std::size_t> positions(order.data() + start, end - start);
      const Tensor x = task.gather_images(positions);
      const auto labels = task.gather_labels(positions);

      Tape tape;
      Var logits = model.forward(tape, x);
      acc.push_back(accuracy(logits.value(), labels));
      Var loss = softmax_cross_entropy(logits, labels);
      zero_grads(params);
      tape.backward(loss);
      if (options.lr == 0.0f) continue;
      l2_gradient(model, options.l2_lambda, options.l2_include_alpha);
      sgd_step(params, options.lr);
    }
  }
  return acc;
}

double avg_online_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("avg_online_accuracy: no batches");
  double s = 0.0;
  for (double a : accuracies) s += a;
  return s / static_cast<double>(accuracies.size());
}

void shrink_and_perturb(Model& model, double p, double sigma, Rng& rng, bool include_alpha) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("shrink factor must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise scale must be nonnegative");
  for (Parameter* param : model.parameters()) {
    if (!param->trainable || (param->role == ParamRole::alpha && !include_alpha)) continue;
    for (float& v : param->value.values()) {
      const double noise = sigma == 0.0 ? 0.0 : sigma * rng.normal();
      v = static_cast<float>(p * v + noise);
    }
  }
}

void scratch_reset(Model& model, Rng& rng) { model.reinitialize(rng); }

namespace {

Tensor probe_batch(const TaskSpec& task, std::size_t cap) {
  std::vector<std::size_t> positions(std::min(cap, task.size()));
  std::iota(positions.begin(), positions.end(), 0);
  return task.gather_images(positions);
}

}  // namespace

RunRecord continual_run(const RunConfig& config, const BenchmarkData& data, std::uint64_t seed,
                        std::optional<Model>* model_out) {
  if (!data.train) throw std::invalid_argument("continual_run needs a training dataset");
  const TaskStream stream(config.benchmark, data, seed, config.overrides);
  const Rng root(seed);
  Rng model_rng = root.derive("model");
  Model model = build_model(config, *data.train, model_rng);

  TrainOptions options;
  options.lr = static_cast<float>(config.lr);
  if (config.method == Method::l2) {
    options.l2_lambda = config.intervention.l2_lambda;
    options.l2_include_alpha = config.intervention.l2_include_alpha;
  }

  RunRecord record;
  record.seed = seed;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    try {
      if (t > 0 && config.method == Method::scratch) {
        Rng rng = root.derive("scratch", t);
        scratch_reset(model, rng);
      }
      if (t > 0 && config.method == Method::shrink_perturb) {
        Rng rng = root.derive("shrink-perturb", t);
        shrink_and_perturb(model, config.intervention.shrink_p, config.intervention.noise_sigma, rng,
                           config.intervention.sp_include_alpha);
      }
      const TaskSpec task = stream.task(t);
      TaskResult result;
      result.task = t;
      result.batch_acc = train_task(model, task, options);
      result.avg_online_acc = avg_online_accuracy(result.batch_acc);
      if (const auto test = stream.test_task(t)) result.test_acc = evaluate(model, *test);
      if (config.metrics) {
        result.metrics = take_snapshot(model, probe_batch(task, config.probe_cap), t, config.srank_delta);
      }
      record.tasks.push_back(std::move(result));
    } catch (const NonFiniteError& e) {
      record.failure = "task " + std::to_string(t) + ": " + e.what();
      record.failed_task = t;
      break;
    } catch (const std::exception& e) {
      throw std::runtime_error("task " + std::to_string(t) + ": " + e.what());
    }
  }
  if (model_out) model_out->emplace(std::move(model));
  return record;
}

}  // namespace plasticity
