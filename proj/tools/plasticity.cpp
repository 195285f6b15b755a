// Command-line front end: run experiment configs, plot result tables, audit
// parameter counts.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>

#include "plasticity/cli/config.hpp"
#include "plasticity/cli/plan.hpp"
#include "plasticity/cli/plot.hpp"

namespace fs = std::filesystem;
using namespace plasticity;

namespace {

fs::path default_data_dir() {
  if (const char* env = std::getenv("PLASTICITY_DATA_DIR")) return env;
  return "data";
}

int cmd_run(const fs::path& config, fs::path data_dir, const fs::path& out, std::size_t jobs, bool resume) {
  const ExperimentPlan plan = parse_config(config);
  if (data_dir.empty()) data_dir = default_data_dir();
  DataCache data(data_dir);
  PlanOptions options{out, jobs, resume};
  std::fprintf(stderr, "%zu cells, %zu jobs, data from %s\n", plan.cells.size(), jobs, data_dir.c_str());
  const ResultTable table = run_plan(plan, data, options);
  std::fprintf(stderr, "%zu rows written to %s\n", table.rows.size(), (out / "results.csv").c_str());
  for (const FailedCell& f : table.failures) std::fprintf(stderr, "failed %s: %s\n", f.run_id.c_str(), f.message.c_str());
  return table.failures.empty() ? 0 : 2;
}

int cmd_plot(const fs::path& csv, const std::string& metric, const fs::path& out) {
  const auto rows = read_result_csv(csv);
  emit_plot(rows, metric, out);
  return 0;
}

int cmd_audit(const fs::path& config) {
  const ExperimentPlan plan = parse_config(config);
  std::set<std::string> seen;
  std::printf("%-40s %-22s %10s %8s %9s\n", "method", "benchmark", "total", "alpha", "overhead");
  for (const PlanCell& cell : plan.cells) {
    const std::string key = method_label(cell.config) + "/" + std::string(to_string(cell.config.benchmark));
    if (!seen.insert(key).second) continue;
    Rng rng(cell.seed);
    const Model model = build_model(cell.config, benchmark_sample_shape(cell.config.benchmark),
                                    benchmark_classes(cell.config.benchmark), rng);
    const ParamAudit a = model.audit();
    std::printf("%-40s %-22s %10zu %8zu %8.2f%%\n", method_label(cell.config).c_str(),
                std::string(to_string(cell.config.benchmark)).c_str(), a.total, a.alpha_added, a.overhead_pct);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning plasticity experiments"};
  app.require_subcommand(1);

  fs::path run_config, data_dir, out_dir = "results";
  std::size_t jobs = 1;
  bool resume = false;
  auto* run = app.add_subcommand("run", "Run every cell of an experiment config");
  run->add_option("config", run_config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--data-dir", data_dir, "Dataset root (default: $PLASTICITY_DATA_DIR or ./data)");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--jobs", jobs, "Cells run in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_flag("--resume", resume, "Skip cells whose results already exist");

  fs::path plot_csv, plot_out;
  std::string metric;
  auto* plot = app.add_subcommand("plot", "Plot a metric per task, one curve per method");
  plot->add_option("table", plot_csv, "results.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("--metric", metric, "Column to plot")->required();
  plot->add_option("--out", plot_out, "SVG file")->required();

  fs::path audit_config;
  auto* audit = app.add_subcommand("audit", "Print parameter counts for each configured model");
  audit->add_option("config", audit_config, "Experiment config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_config, data_dir, out_dir, jobs, resume);
    if (*plot) return cmd_plot(plot_csv, metric, plot_out);
    if (*audit) return cmd_audit(audit_config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
