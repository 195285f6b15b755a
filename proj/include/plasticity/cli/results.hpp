#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/cli/config.hpp"
#include "plasticity/trainer/trainer.hpp"

namespace plasticity {

inline constexpr std::string_view kResultHeader =
    "run_id,method,benchmark,seed,task,avg_online_acc,test_acc,sign_entropy,weight_norm,srank_mean";
inline constexpr std::string_view kHeatmapHeader = "layer,neuron_rank,task,alpha,saturation";

struct ResultRow {
  std::string run_id;
  std::string method;
  std::string benchmark;
  std::uint64_t seed = 0;
  std::size_t task = 0;
  double avg_online_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<double> sign_entropy;
  std::optional<double> weight_norm;
  std::optional<double> srank_mean;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct FailedCell {
  std::string run_id;
  std::string message;

  friend bool operator==(const FailedCell&, const FailedCell&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<FailedCell> failures;

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

// Metric columns that plots can select.
std::vector<std::string_view> metric_columns();
// Value of a metric column for a row; throws std::invalid_argument for an
// unknown column name.
std::optional<double> metric_value(const ResultRow& row, std::string_view metric);

std::vector<ResultRow> record_rows(const RunRecord& record, const std::string& run_id, const RunConfig& config);

// Numbers are printed with the shortest exact round-trip form, so equal
// tables give byte-identical files.
std::string format_rows(std::span<const ResultRow> rows, bool header = true);
std::vector<ResultRow> parse_rows(std::string_view csv);
std::vector<ResultRow> read_result_csv(const std::filesystem::path& path);

/// Rows of the alpha/saturation heatmap: for every task snapshot, each alpha
/// layer's neurons ordered by saturation averaged over the whole run.
std::string format_heatmap(const RunRecord& record, const Model& model);

// Write to a sibling temporary file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace plasticity
