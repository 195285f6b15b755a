#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "plasticity/benchmarks/dataset.hpp"
#include "plasticity/rng.hpp"

namespace plasticity {

enum class BenchmarkKind {
  permuted_mnist,
  random_label_mnist,
  random_label_cifar10,
  shuffle_label_cifar10,
  class_split_cifar100,
};

std::string_view to_string(BenchmarkKind kind);
BenchmarkKind parse_benchmark_kind(std::string_view text);

struct BenchmarkDefaults {
  std::size_t tasks;
  std::size_t epochs;
  std::size_t batch;
  std::size_t images;       // training images per task
  std::size_t test_images;  // 0 when the benchmark has no test metric
};

BenchmarkDefaults defaults_for(BenchmarkKind kind);

// Desk-scale overrides; unset fields keep the benchmark defaults.
struct StreamOverrides {
  std::optional<std::size_t> tasks = std::nullopt;
  std::optional<std::size_t> epochs = std::nullopt;
  std::optional<std::size_t> batch = std::nullopt;
  std::optional<std::size_t> images = std::nullopt;
  std::optional<std::size_t> test_images = std::nullopt;

  friend bool operator==(const StreamOverrides&, const StreamOverrides&) = default;
};

/// One task's data: a view over an immutable base dataset with optional
/// relabeling and pixel permutation, plus its epoch/batch schedule.
struct TaskSpec {
  std::shared_ptr<const Dataset> base;
  std::vector<std::size_t> indices;
  std::vector<int> labels;  // one per view position
  std::shared_ptr<const std::vector<std::size_t>> pixel_permutation;  // out[j] = in[perm[j]]
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  std::uint64_t order_seed = 0;

  std::size_t size() const { return indices.size(); }
  std::size_t batches_per_epoch() const { return (size() + batch_size - 1) / batch_size; }
  // M = epochs * ceil(N / batch)
  std::size_t total_batches() const { return epochs * batches_per_epoch(); }

  // Seeded shuffle of view positions for one epoch.
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;
  // (B x C x H x W) images for the given view positions, permutation applied.
  Tensor gather_images(std::span<const std::size_t> positions) const;
  std::vector<int> gather_labels(std::span<const std::size_t> positions) const;
};

struct BenchmarkData {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;  // may be null
};

/// Seeded, lazily generated task sequence. Every task is a pure function of
/// (kind, seed, overrides, t), so task t can be rebuilt without its
/// predecessors.
class TaskStream {
 public:
  TaskStream(BenchmarkKind kind, BenchmarkData data, std::uint64_t seed, StreamOverrides overrides = {});

  BenchmarkKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return tasks_; }
  std::size_t epochs() const { return epochs_; }
  std::size_t batch_size() const { return batch_; }
  int num_classes() const { return data_.train->num_classes; }

  TaskSpec task(std::size_t t) const;
  // Held-out evaluation view for task t; empty when the benchmark has none.
  std::optional<TaskSpec> test_task(std::size_t t) const;

  // Training indices shared by every task (fixed subsample).
  const std::vector<std::size_t>& subsample() const { return subsample_; }
  // Classes of task t (class-split only).
  std::vector<int> task_classes(std::size_t t) const;

 private:
  std::shared_ptr<const std::vector<std::size_t>> permutation_for(std::size_t t) const;
  std::vector<int> label_permutation_for(std::size_t t) const;
  TaskSpec make_view(std::shared_ptr<const Dataset> base, std::vector<std::size_t> indices, std::size_t t) const;

  BenchmarkKind kind_;
  BenchmarkData data_;
  std::uint64_t seed_;
  Rng root_;
  std::size_t tasks_, epochs_, batch_, images_, test_images_;
  std::vector<std::size_t> subsample_;
  std::vector<std::size_t> held_out_;
  std::vector<std::size_t> test_subsample_;
  std::vector<int> class_order_;
  std::vector<std::vector<std::size_t>> class_samples_;  // class-split: chosen samples per class
};

TaskStream gen_permuted_mnist(std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
                              std::uint64_t seed, StreamOverrides overrides = {});
enum class RandomLabelVariant { mnist, cifar10 };
TaskStream gen_random_label(std::shared_ptr<const Dataset> train, RandomLabelVariant variant, std::uint64_t seed,
                            StreamOverrides overrides = {});
TaskStream gen_shuffle_label(std::shared_ptr<const Dataset> train, std::uint64_t seed, StreamOverrides overrides = {});
TaskStream gen_class_split(std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
                           std::uint64_t seed, StreamOverrides overrides = {});

}  // namespace plasticity
