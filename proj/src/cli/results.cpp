#include "plasticity/cli/results.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "plasticity/errors.hpp"

namespace plasticity {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, int lineno) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& s, int lineno) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(lineno) + ": bad integer '" + s + "'");
  }
  return v;
}

std::optional<double> to_optional(const std::string& s, int lineno) {
  if (s.empty()) return std::nullopt;
  return to_double(s, lineno);
}

}  // namespace

std::vector<std::string_view> metric_columns() {
  return {"avg_online_acc", "test_acc", "sign_entropy", "weight_norm", "srank_mean"};
}

std::optional<double> metric_value(const ResultRow& row, std::string_view metric) {
  if (metric == "avg_online_acc") return row.avg_online_acc;
  if (metric == "test_acc") return row.test_acc;
  if (metric == "sign_entropy") return row.sign_entropy;
  if (metric == "weight_norm") return row.weight_norm;
  if (metric == "srank_mean") return row.srank_mean;
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

std::vector<ResultRow> record_rows(const RunRecord& record, const std::string& run_id, const RunConfig& config) {
  std::vector<ResultRow> rows;
  for (const TaskResult& t : record.tasks) {
    ResultRow row;
    row.run_id = run_id;
    row.method = method_label(config);
    row.benchmark = std::string(to_string(config.benchmark));
    row.seed = record.seed;
    row.task = t.task;
    row.avg_online_acc = t.avg_online_acc;
    row.test_acc = t.test_acc;
    if (t.metrics) {
      row.sign_entropy = t.metrics->sign_entropy_mean;
      row.weight_norm = t.metrics->weight_norm;
      row.srank_mean = t.metrics->srank_mean();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_rows(std::span<const ResultRow> rows, bool header) {
  std::string out;
  if (header) {
    out += kResultHeader;
    out += '\n';
  }
  for (const ResultRow& r : rows) {
    out += r.run_id + ',' + r.method + ',' + r.benchmark + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.task) + ',' + fmt(r.avg_online_acc) + ',' + fmt(r.test_acc) + ',' + fmt(r.sign_entropy) +
           ',' + fmt(r.weight_norm) + ',' + fmt(r.srank_mean) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_rows(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) throw FormatError("result table lacks the expected header");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 10) {
      throw FormatError("line " + std::to_string(lineno) + ": expected 10 columns, got " +
                        std::to_string(cells.size()));
    }
    ResultRow r;
    r.run_id = cells[0];
    r.method = cells[1];
    r.benchmark = cells[2];
    r.seed = to_uint(cells[3], lineno);
    r.task = to_uint(cells[4], lineno);
    r.avg_online_acc = to_double(cells[5], lineno);
    r.test_acc = to_optional(cells[6], lineno);
    r.sign_entropy = to_optional(cells[7], lineno);
    r.weight_norm = to_optional(cells[8], lineno);
    r.srank_mean = to_optional(cells[9], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_result_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rows(buf.str());
}

std::string format_heatmap(const RunRecord& record, const Model& model) {
  std::string out(kHeatmapHeader);
  out += '\n';
  const AlphaStore* alphas = model.alphas();
  if (alphas == nullptr || alphas->layout().granularity() != Granularity::neuron) return out;
  const auto& layers = model.activated_layers();

  std::vector<const MetricSnapshot*> snaps;
  for (const TaskResult& t : record.tasks) {
    if (t.metrics) snaps.push_back(&*t.metrics);
  }
  if (snaps.empty()) return out;

  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].alpha_layer) continue;
    const std::size_t a = *layers[l].alpha_layer;
    std::vector<double> mean(layers[l].units, 0.0);
    for (const MetricSnapshot* s : snaps) {
      for (std::size_t n = 0; n < mean.size(); ++n) mean[n] += s->saturation.at(l).at(n);
    }
    for (double& m : mean) m /= static_cast<double>(snaps.size());
    std::vector<std::size_t> order(mean.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return mean[x] < mean[y]; });
    for (const MetricSnapshot* s : snaps) {
      for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t n = order[r];
        out += std::to_string(l) + ',' + std::to_string(r) + ',' + std::to_string(s->task_index) + ',' +
               fmt(s->alpha.at(a).at(n)) + ',' + fmt(s->saturation[l][n]) + '\n';
      }
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace plasticity
