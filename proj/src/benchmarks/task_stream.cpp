#include "plasticity/benchmarks/task_stream.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace {

constexpr std::size_t kClassesPerSplit = 5;

void require_images(const Dataset& d, int classes, std::string_view what) {
  if (d.images.rank() != 4) {
    throw ShapeError(std::string(what) + " expects (N x C x H x W) images, got " + to_string(d.images.shape()));
  }
  if (d.num_classes != classes) {
    throw ShapeError(std::string(what) + " expects " + std::to_string(classes) + " classes, got " +
                     std::to_string(d.num_classes));
  }
}

std::vector<std::size_t> first_n(std::vector<std::size_t> order, std::size_t n) {
  order.resize(std::min(n, order.size()));
  return order;
}

}  // namespace

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::permuted_mnist: return "permuted_mnist";
    case BenchmarkKind::random_label_mnist: return "random_label_mnist";
    case BenchmarkKind::random_label_cifar10: return "random_label_cifar10";
    case BenchmarkKind::shuffle_label_cifar10: return "shuffle_label_cifar10";
    case BenchmarkKind::class_split_cifar100: return "class_split_cifar100";
  }
  return "?";
}

BenchmarkKind parse_benchmark_kind(std::string_view text) {
  for (BenchmarkKind k : {BenchmarkKind::permuted_mnist, BenchmarkKind::random_label_mnist,
                          BenchmarkKind::random_label_cifar10, BenchmarkKind::shuffle_label_cifar10,
                          BenchmarkKind::class_split_cifar100}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown benchmark '" + std::string(text) + "'");
}

BenchmarkDefaults defaults_for(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::permuted_mnist: return {400, 1, 16, 10000, 10000};
    case BenchmarkKind::random_label_mnist: return {250, 200, 16, 1200, 0};
    case BenchmarkKind::random_label_cifar10: return {100, 700, 16, 1200, 0};
    case BenchmarkKind::shuffle_label_cifar10: return {100, 20, 16, 5000, 1000};
    case BenchmarkKind::class_split_cifar100: return {20, 20, 32, 2500, 10000};
  }
  throw std::logic_error("unhandled benchmark");
}

std::vector<std::size_t> TaskSpec::epoch_order(std::size_t epoch) const {
  return Rng(order_seed).derive("epoch", epoch).permutation(size());
}

Tensor TaskSpec::gather_images(std::span<const std::size_t> positions) const {
  Shape shape = base->sample_shape();
  const std::size_t stride = base->sample_size();
  shape.insert(shape.begin(), positions.size());
  Tensor out(shape);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const auto src = base->sample(indices.at(positions[r]));
    float* dst = out.data() + r * stride;
    if (pixel_permutation) {
      const auto& perm = *pixel_permutation;
      for (std::size_t j = 0; j < stride; ++j) dst[j] = src[perm[j]];
    } else {
      std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

std::vector<int> TaskSpec::gather_labels(std::span<const std::size_t> positions) const {
  std::vector<int> out(positions.size());
  for (std::size_t r = 0; r < positions.size(); ++r) out[r] = labels.at(positions[r]);
  return out;
}

TaskStream::TaskStream(BenchmarkKind kind, BenchmarkData data, std::uint64_t seed, StreamOverrides overrides)
    : kind_(kind), data_(std::move(data)), seed_(seed), root_(Rng(seed).derive(to_string(kind))) {
  if (!data_.train) throw std::invalid_argument("task stream needs a training dataset");
  const BenchmarkDefaults d = defaults_for(kind);
  tasks_ = overrides.tasks.value_or(d.tasks);
  epochs_ = overrides.epochs.value_or(d.epochs);
  batch_ = overrides.batch.value_or(d.batch);
  images_ = overrides.images.value_or(d.images);
  test_images_ = overrides.test_images.value_or(d.test_images);
  if (tasks_ == 0 || epochs_ == 0 || batch_ == 0 || images_ == 0) {
    throw ConfigError("tasks, epochs, batch and images must all be positive");
  }
  const Dataset& train = *data_.train;
  const auto train_order = root_.derive("subsample").permutation(train.size());

  require_images(train, kind == BenchmarkKind::class_split_cifar100 ? 100 : 10, to_string(kind));

  if (kind == BenchmarkKind::class_split_cifar100) {
    if (tasks_ * kClassesPerSplit > 100) {
      throw ConfigError("class_split_cifar100 has at most 20 tasks of 5 classes");
    }
    const std::size_t per_class = images_ / kClassesPerSplit;
    if (per_class == 0) throw ConfigError("class_split_cifar100 needs at least 5 images per task");
    const auto order = root_.derive("class-order").permutation(100);
    class_order_.assign(order.begin(), order.end());
    std::vector<std::vector<std::size_t>> by_class(100);
    for (std::size_t i = 0; i < train.size(); ++i) by_class[train.labels[i]].push_back(i);
    class_samples_.assign(100, {});
    for (std::size_t k = 0; k < tasks_ * kClassesPerSplit; ++k) {
      const int c = class_order_[k];
      auto& pool = by_class[c];
      if (pool.size() < per_class) {
        throw std::runtime_error("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                                 " samples, task needs " + std::to_string(per_class));
      }
      root_.derive("class-samples", c).shuffle(std::span<std::size_t>(pool));
      class_samples_[c] = first_n(pool, per_class);
    }
    if (data_.test && test_images_ > 0) {
      test_subsample_ = first_n(root_.derive("test-subsample").permutation(data_.test->size()), test_images_);
      std::sort(test_subsample_.begin(), test_subsample_.end());
    }
    return;
  }

  if (images_ > train.size()) {
    throw std::invalid_argument(std::string(to_string(kind)) + ": base dataset has " + std::to_string(train.size()) +
                                " images, " + std::to_string(images_) + " requested");
  }
  subsample_ = first_n(train_order, images_);
  if (kind == BenchmarkKind::shuffle_label_cifar10) {
    held_out_.assign(train_order.begin() + images_,
                     train_order.begin() + std::min(train.size(), images_ + test_images_));
  }
  if (kind == BenchmarkKind::permuted_mnist && data_.test && test_images_ > 0) {
    if (data_.test->sample_shape() != train.sample_shape()) {
      throw ShapeError("permuted_mnist test images differ in shape from the training images");
    }
    test_subsample_ = first_n(root_.derive("test-subsample").permutation(data_.test->size()), test_images_);
  }
}

std::shared_ptr<const std::vector<std::size_t>> TaskStream::permutation_for(std::size_t t) const {
  return std::make_shared<const std::vector<std::size_t>>(
      root_.derive("pixel-permutation", t).permutation(data_.train->sample_size()));
}

std::vector<int> TaskStream::label_permutation_for(std::size_t t) const {
  const auto p = root_.derive("label-permutation", t).permutation(10);
  return std::vector<int>(p.begin(), p.end());
}

std::vector<int> TaskStream::task_classes(std::size_t t) const {
  if (kind_ != BenchmarkKind::class_split_cifar100) return {};
  if (t >= tasks_) throw std::out_of_range("task index " + std::to_string(t));
  return std::vector<int>(class_order_.begin() + t * kClassesPerSplit,
                          class_order_.begin() + (t + 1) * kClassesPerSplit);
}

TaskSpec TaskStream::make_view(std::shared_ptr<const Dataset> base, std::vector<std::size_t> indices,
                               std::size_t t) const {
  TaskSpec spec;
  spec.base = std::move(base);
  spec.indices = std::move(indices);
  spec.labels.reserve(spec.indices.size());
  for (std::size_t i : spec.indices) spec.labels.push_back(spec.base->labels[i]);
  spec.epochs = epochs_;
  spec.batch_size = batch_;
  spec.order_seed = root_.derive("batch-order", t).key();
  return spec;
}

TaskSpec TaskStream::task(std::size_t t) const {
  if (t >= tasks_) throw std::out_of_range("task index " + std::to_string(t) + " >= " + std::to_string(tasks_));
  switch (kind_) {
    case BenchmarkKind::permuted_mnist: {
      TaskSpec spec = make_view(data_.train, subsample_, t);
      spec.pixel_permutation = permutation_for(t);
      return spec;
    }
    case BenchmarkKind::random_label_mnist:
    case BenchmarkKind::random_label_cifar10: {
      TaskSpec spec = make_view(data_.train, subsample_, t);
      Rng labels = root_.derive("labels", t);
      for (int& l : spec.labels) l = static_cast<int>(labels.below(10));
      return spec;
    }
    case BenchmarkKind::shuffle_label_cifar10: {
      TaskSpec spec = make_view(data_.train, subsample_, t);
      const auto pi = label_permutation_for(t);
      for (int& l : spec.labels) l = pi[l];
      return spec;
    }
    case BenchmarkKind::class_split_cifar100: {
      std::vector<std::size_t> indices;
      for (int c : task_classes(t)) indices.insert(indices.end(), class_samples_[c].begin(), class_samples_[c].end());
      return make_view(data_.train, std::move(indices), t);
    }
  }
  throw std::logic_error("unhandled benchmark");
}

std::optional<TaskSpec> TaskStream::test_task(std::size_t t) const {
  if (t >= tasks_) throw std::out_of_range("task index " + std::to_string(t));
  switch (kind_) {
    case BenchmarkKind::permuted_mnist: {
      if (test_subsample_.empty()) return std::nullopt;
      TaskSpec spec = make_view(data_.test, test_subsample_, t);
      spec.pixel_permutation = permutation_for(t);
      return spec;
    }
    case BenchmarkKind::shuffle_label_cifar10: {
      if (held_out_.empty()) return std::nullopt;
      TaskSpec spec = make_view(data_.train, held_out_, t);
      const auto pi = label_permutation_for(t);
      for (int& l : spec.labels) l = pi[l];
      return spec;
    }
    case BenchmarkKind::class_split_cifar100: {
      if (test_subsample_.empty()) return std::nullopt;
      std::vector<bool> seen(100, false);
      for (std::size_t k = 0; k < (t + 1) * kClassesPerSplit; ++k) seen[class_order_[k]] = true;
      std::vector<std::size_t> indices;
      for (std::size_t i : test_subsample_) {
        if (seen[data_.test->labels[i]]) indices.push_back(i);
      }
      if (indices.empty()) return std::nullopt;
      return make_view(data_.test, std::move(indices), t);
    }
    case BenchmarkKind::random_label_mnist:
    case BenchmarkKind::random_label_cifar10:
      return std::nullopt;
  }
  return std::nullopt;
}

TaskStream gen_permuted_mnist(std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
                              std::uint64_t seed, StreamOverrides overrides) {
  return TaskStream(BenchmarkKind::permuted_mnist, {std::move(train), std::move(test)}, seed, overrides);
}

TaskStream gen_random_label(std::shared_ptr<const Dataset> train, RandomLabelVariant variant, std::uint64_t seed,
                            StreamOverrides overrides) {
  const BenchmarkKind kind = variant == RandomLabelVariant::mnist ? BenchmarkKind::random_label_mnist
                                                                  : BenchmarkKind::random_label_cifar10;
  return TaskStream(kind, {std::move(train), nullptr}, seed, overrides);
}

TaskStream gen_shuffle_label(std::shared_ptr<const Dataset> train, std::uint64_t seed, StreamOverrides overrides) {
  return TaskStream(BenchmarkKind::shuffle_label_cifar10, {std::move(train), nullptr}, seed, overrides);
}

TaskStream gen_class_split(std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
                           std::uint64_t seed, StreamOverrides overrides) {
  return TaskStream(BenchmarkKind::class_split_cifar100, {std::move(train), std::move(test)}, seed, overrides);
}

}  // namespace plasticity
