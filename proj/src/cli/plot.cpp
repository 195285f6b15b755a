#include "plasticity/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace plasticity {

std::vector<PlotSeries> plot_series(std::span<const ResultRow> rows, std::string_view metric) {
  std::map<std::string, std::map<std::size_t, std::vector<double>>> grouped;
  for (const ResultRow& r : rows) {
    if (auto v = metric_value(r, metric)) grouped[r.method][r.task].push_back(*v);
  }
  if (grouped.empty()) throw std::invalid_argument("no values for metric '" + std::string(metric) + "'");
  std::vector<PlotSeries> out;
  for (const auto& [method, by_task] : grouped) {
    PlotSeries s;
    s.method = method;
    for (const auto& [task, values] : by_task) {
      // Shifted by the first value: identical runs give exactly zero spread.
      const double shift = values.front();
      double sum = 0.0, sq = 0.0;
      for (double v : values) {
        sum += v - shift;
        sq += (v - shift) * (v - shift);
      }
      const double n = static_cast<double>(values.size());
      const double mean = shift + sum / n;
      const double var = std::max(0.0, sq / n - (sum / n) * (sum / n));
      s.tasks.push_back(task);
      s.mean.push_back(mean);
      s.stddev.push_back(std::sqrt(var));
      s.count.push_back(values.size());
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, std::string_view metric) {
  constexpr double W = 720, H = 440, left = 70, right = 180, top = 30, bottom = 50;
  double x_max = 1, y_lo = INFINITY, y_hi = -INFINITY;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
      x_max = std::max(x_max, static_cast<double>(s.tasks[i]));
      y_lo = std::min(y_lo, s.mean[i] - s.stddev[i]);
      y_hi = std::max(y_hi, s.mean[i] + s.stddev[i]);
    }
  }
  if (!(y_hi > y_lo)) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double t) { return left + pw * t / x_max; };
  auto py = [&](double v) { return top + ph * (1.0 - (v - y_lo) / (y_hi - y_lo)); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(top + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) +
         "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + (y_hi - y_lo) * k / 4.0;
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" + num(v) +
           "</text>\n";
    const double t = x_max * k / 4.0;
    svg += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" +
           std::to_string(static_cast<long>(std::lround(t))) + "</text>\n";
  }
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(H - 10) + "\" text-anchor=\"middle\">task</text>\n";
  svg += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" transform=\"rotate(-90 16 " + num(top + ph / 2) +
         ")\" text-anchor=\"middle\">" + std::string(metric) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string band, line;
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
      band += num(px(s.tasks[i])) + "," + num(py(s.mean[i] + s.stddev[i])) + " ";
      line += num(px(s.tasks[i])) + "," + num(py(s.mean[i])) + " ";
    }
    for (std::size_t i = s.tasks.size(); i-- > 0;) {
      band += num(px(s.tasks[i])) + "," + num(py(s.mean[i] - s.stddev[i])) + " ";
    }
    svg += "<polygon class=\"band\" points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    svg += "<polyline class=\"mean\" data-method=\"" + s.method + "\" points=\"" + line + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 16 * static_cast<double>(k);
    svg += "<rect x=\"" + num(W - right + 14) + "\" y=\"" + num(ly) + "\" width=\"12\" height=\"3\" fill=\"" + color +
           "\"/>\n";
    svg += "<text x=\"" + num(W - right + 32) + "\" y=\"" + num(ly + 5) + "\">" + s.method + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(std::span<const ResultRow> rows, std::string_view metric, const std::filesystem::path& out) {
  write_file_atomic(out, render_svg(plot_series(rows, metric), metric));
}

}  // namespace plasticity
