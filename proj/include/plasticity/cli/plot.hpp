#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/cli/results.hpp"

namespace plasticity {

// One method's curve: per task, mean and population standard deviation
// over the runs that report the metric.
struct PlotSeries {
  std::string method;
  std::vector<std::size_t> tasks;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> count;
};

// Series sorted by method name. Throws std::invalid_argument when the metric
// is unknown or no row carries a value for it.
std::vector<PlotSeries> plot_series(std::span<const ResultRow> rows, std::string_view metric);
std::string render_svg(const std::vector<PlotSeries>& series, std::string_view metric);
void emit_plot(std::span<const ResultRow> rows, std::string_view metric, const std::filesystem::path& out);

}  // namespace plasticity
