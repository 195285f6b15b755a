#include "plasticity/cli/plan.hpp"

#include <atomic>
#include <thread>

#include "plasticity/benchmarks/manifest.hpp"
#include "plasticity/models/checkpoint.hpp"

namespace plasticity {

namespace fs = std::filesystem;

DataCache::DataCache(fs::path data_dir)
    : loader_([dir = std::move(data_dir)](BenchmarkKind kind) { return load_benchmark_data(kind, dir); }) {}

DataCache::DataCache(Loader loader) : loader_(std::move(loader)) {}

BenchmarkData DataCache::get(BenchmarkKind kind) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(kind);
  if (it == cache_.end()) it = cache_.emplace(kind, loader_(kind)).first;
  return it->second;
}

namespace {

struct CellOutcome {
  std::vector<ResultRow> rows;
  std::optional<FailedCell> failure;
};

std::string metadata(const PlanCell& cell) {
  const RunConfig& c = cell.config;
  std::string out = "# run " + cell.run_id + "\n";
  out += canonical_run_text(c, cell.checkpoint);
  out += "seeds = " + std::to_string(cell.seed) + "\n";
  out += "# weight init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases, alpha uniform [0, 1)\n";
  out += std::string("# shrink & perturb includes alpha: ") + (c.intervention.sp_include_alpha ? "yes" : "no") + "\n";
  out += std::string("# l2 includes alpha: ") + (c.intervention.l2_include_alpha ? "yes" : "no") + "\n";
  out += "# weight_norm excludes alpha\n";
  return out;
}

CellOutcome run_cell(const PlanCell& cell, DataCache& data, const PlanOptions& options) {
  const fs::path runs = options.out_dir / "runs";
  const fs::path csv = runs / (cell.run_id + ".csv");
  CellOutcome outcome;
  if (options.resume && fs::exists(csv)) {
    try {
      outcome.rows = read_result_csv(csv);
      return outcome;
    } catch (const std::exception&) {
      // Unreadable leftovers are recomputed.
    }
  }
  try {
    const BenchmarkData base = data.get(cell.config.benchmark);
    std::optional<Model> model;
    const RunRecord record = continual_run(cell.config, base, cell.seed, &model);
    outcome.rows = record_rows(record, cell.run_id, cell.config);
    write_file_atomic(runs / (cell.run_id + ".meta.txt"), metadata(cell));
    if (record.failure) {
      write_file_atomic(runs / (cell.run_id + ".partial.csv"), format_rows(outcome.rows));
      outcome.failure = FailedCell{cell.run_id, *record.failure};
      outcome.rows.clear();
      return outcome;
    }
    if (model && cell.config.method == Method::adalin && cell.config.granularity == Granularity::neuron &&
        cell.config.metrics) {
      write_file_atomic(runs / (cell.run_id + ".heatmap.csv"), format_heatmap(record, *model));
    }
    if (model && cell.checkpoint) save_checkpoint(*model, runs / (cell.run_id + ".ckpt"));
    write_file_atomic(csv, format_rows(outcome.rows));
  } catch (const std::exception& e) {
    outcome.rows.clear();
    outcome.failure = FailedCell{cell.run_id, e.what()};
  }
  return outcome;
}

std::string format_failures(const std::vector<FailedCell>& failures) {
  std::string out = "run_id,message\n";
  for (const FailedCell& f : failures) {
    std::string msg = f.message;
    for (char& ch : msg) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out += f.run_id + ',' + msg + '\n';
  }
  return out;
}

}  // namespace

ResultTable run_plan(const ExperimentPlan& plan, DataCache& data, const PlanOptions& options) {
  fs::create_directories(options.out_dir / "runs");
  std::vector<CellOutcome> outcomes(plan.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
      outcomes[i] = run_cell(plan.cells[i], data, options);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, plan.cells.size()));
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  ResultTable table;
  for (CellOutcome& o : outcomes) {
    table.rows.insert(table.rows.end(), o.rows.begin(), o.rows.end());
    if (o.failure) table.failures.push_back(std::move(*o.failure));
  }
  write_file_atomic(options.out_dir / "results.csv", format_rows(table.rows));
  if (!table.failures.empty()) {
    write_file_atomic(options.out_dir / "failures.csv", format_failures(table.failures));
  } else {
    fs::remove(options.out_dir / "failures.csv");
  }
  return table;
}

}  // namespace plasticity
