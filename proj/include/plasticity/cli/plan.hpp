#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>

#include "plasticity/cli/config.hpp"
#include "plasticity/cli/results.hpp"

namespace plasticity {

// Loads each benchmark's base data once and shares it read-only.
class DataCache {
 public:
  using Loader = std::function<BenchmarkData(BenchmarkKind)>;
  explicit DataCache(std::filesystem::path data_dir);
  explicit DataCache(Loader loader);
  BenchmarkData get(BenchmarkKind kind);

 private:
  Loader loader_;
  std::mutex mutex_;
  std::map<BenchmarkKind, BenchmarkData> cache_;
};

struct PlanOptions {
  std::filesystem::path out_dir = "results";
  std::size_t jobs = 1;
  bool resume = false;
};

/// Runs every cell, at most `jobs` at a time. Each cell writes
/// runs/<run_id>.csv (plus .meta.txt, and .heatmap.csv for neuron-level
/// alphas) atomically; results.csv merges them in plan order. A cell that
/// throws or stops on a non-finite loss is listed in failures.csv and the
/// rest of the plan carries on. With resume, cells whose CSV already exists
/// are read back instead of rerun.
ResultTable run_plan(const ExperimentPlan& plan, DataCache& data, const PlanOptions& options);

}  // namespace plasticity
