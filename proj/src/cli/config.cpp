#include "plasticity/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "plasticity/errors.hpp"
#include "plasticity/rng.hpp"

namespace plasticity {

namespace {

enum class ValueType { benchmark, method, base, gate, granularity, real, count, boolean, seed };

struct KeyDef {
  std::string_view name;
  ValueType type;
};

// Schema order is also the canonical serialization order.
constexpr KeyDef kSchema[] = {
    {"benchmark", ValueType::benchmark},   {"method", ValueType::method},
    {"activation", ValueType::base},       {"gate", ValueType::gate},
    {"granularity", ValueType::granularity}, {"lr", ValueType::real},
    {"batch", ValueType::count},           {"tasks", ValueType::count},
    {"epochs", ValueType::count},          {"images", ValueType::count},
    {"test_images", ValueType::count},     {"shrink_p", ValueType::real},
    {"noise_sigma", ValueType::real},      {"l2_lambda", ValueType::real},
    {"sp_include_alpha", ValueType::boolean}, {"l2_include_alpha", ValueType::boolean},
    {"probe_cap", ValueType::count},       {"srank_delta", ValueType::real},
    {"metrics", ValueType::boolean},       {"checkpoint", ValueType::boolean},
    {"seeds", ValueType::seed},
};

const KeyDef* find_key(std::string_view name) {
  for (const KeyDef& k : kSchema) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_count(std::string_view key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + text + "'");
}

template <class F>
std::string canonical_enum(std::string_view key, const std::string& text, F parse) {
  try {
    return std::string(to_string(parse(text)));
  } catch (const std::invalid_argument&) {
    throw ConfigError("key '" + std::string(key) + "': unknown value '" + text + "'");
  }
}

std::string canonical_value(const KeyDef& def, const std::string& text) {
  switch (def.type) {
    case ValueType::benchmark: return canonical_enum(def.name, text, parse_benchmark_kind);
    case ValueType::method: return canonical_enum(def.name, text, parse_method);
    case ValueType::base: return canonical_enum(def.name, text, parse_base_kind);
    case ValueType::gate: return canonical_enum(def.name, text, parse_gate_kind);
    case ValueType::granularity: return canonical_enum(def.name, text, parse_granularity);
    case ValueType::real: return format_real(parse_real(def.name, text));
    case ValueType::count:
    case ValueType::seed: return std::to_string(parse_count(def.name, text));
    case ValueType::boolean: return parse_bool(def.name, text) ? "true" : "false";
  }
  throw std::logic_error("unhandled value type");
}

void check_range(bool ok, std::string_view key, const std::string& what) {
  if (!ok) throw ConfigError("key '" + std::string(key) + "': " + what);
}

void apply(RunConfig& c, bool& checkpoint, std::string_view key, const std::string& v) {
  if (key == "benchmark") c.benchmark = parse_benchmark_kind(v);
  else if (key == "method") c.method = parse_method(v);
  else if (key == "activation") c.base = parse_base_kind(v);
  else if (key == "gate") c.gate = parse_gate_kind(v);
  else if (key == "granularity") c.granularity = parse_granularity(v);
  else if (key == "lr") {
    c.lr = parse_real(key, v);
    check_range(c.lr >= 0.0, key, "must be nonnegative");
  } else if (key == "batch") {
    c.overrides.batch = parse_count(key, v);
    check_range(*c.overrides.batch > 0, key, "must be positive");
  } else if (key == "tasks") {
    c.overrides.tasks = parse_count(key, v);
    check_range(*c.overrides.tasks > 0, key, "must be positive");
  } else if (key == "epochs") {
    c.overrides.epochs = parse_count(key, v);
    check_range(*c.overrides.epochs > 0, key, "must be positive");
  } else if (key == "images") {
    c.overrides.images = parse_count(key, v);
    check_range(*c.overrides.images > 0, key, "must be positive");
  } else if (key == "test_images") c.overrides.test_images = parse_count(key, v);
  else if (key == "shrink_p") {
    c.intervention.shrink_p = parse_real(key, v);
    check_range(c.intervention.shrink_p > 0.0 && c.intervention.shrink_p <= 1.0, key, "must lie in (0, 1]");
  } else if (key == "noise_sigma") {
    c.intervention.noise_sigma = parse_real(key, v);
    check_range(c.intervention.noise_sigma >= 0.0, key, "must be nonnegative");
  } else if (key == "l2_lambda") {
    c.intervention.l2_lambda = parse_real(key, v);
    check_range(c.intervention.l2_lambda >= 0.0, key, "must be nonnegative");
  } else if (key == "sp_include_alpha") c.intervention.sp_include_alpha = parse_bool(key, v);
  else if (key == "l2_include_alpha") c.intervention.l2_include_alpha = parse_bool(key, v);
  else if (key == "probe_cap") {
    c.probe_cap = parse_count(key, v);
    check_range(c.probe_cap > 0, key, "must be positive");
  } else if (key == "srank_delta") {
    c.srank_delta = parse_real(key, v);
    check_range(c.srank_delta > 0.0 && c.srank_delta <= 1.0, key, "must lie in (0, 1]");
  } else if (key == "metrics") c.metrics = parse_bool(key, v);
  else if (key == "checkpoint") checkpoint = parse_bool(key, v);
  else throw ConfigError("unknown key '" + std::string(key) + "'");
}

}  // namespace

ConfigSweep parse_config_text(std::string_view text) {
  ConfigSweep sweep;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const KeyDef* def = find_key(key);
    if (def == nullptr) throw ConfigError("unknown key '" + key + "' on line " + std::to_string(lineno));
    if (sweep.values.count(key)) throw ConfigError("key '" + key + "' given twice");
    std::vector<std::string> values;
    std::stringstream rest(line.substr(eq + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigError("key '" + key + "': empty value");
      values.push_back(canonical_value(*def, item));
      if (def->type != ValueType::seed) {
        // Range checks up front, so a bad value is reported with its line.
        RunConfig probe;
        bool checkpoint = false;
        try {
          apply(probe, checkpoint, key, values.back());
        } catch (const ConfigError& e) {
          throw ConfigError(std::string(e.what()) + " on line " + std::to_string(lineno));
        }
      }
    }
    if (values.empty()) throw ConfigError("key '" + key + "': missing value");
    sweep.values[key] = std::move(values);
  }
  return sweep;
}

ConfigSweep parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const ConfigSweep& sweep) {
  std::string out;
  for (const KeyDef& def : kSchema) {
    auto it = sweep.values.find(std::string(def.name));
    if (it == sweep.values.end()) continue;
    out += std::string(def.name) + " =";
    for (std::size_t i = 0; i < it->second.size(); ++i) out += (i ? ", " : " ") + it->second[i];
    out += '\n';
  }
  return out;
}

ExperimentPlan expand(const ConfigSweep& sweep) {
  for (const char* required : {"benchmark", "method"}) {
    if (!sweep.values.count(required)) throw ConfigError(std::string("missing required key '") + required + "'");
  }
  std::vector<std::pair<std::string_view, const std::vector<std::string>*>> axes;
  for (const KeyDef& def : kSchema) {
    if (def.type == ValueType::seed) continue;
    if (auto it = sweep.values.find(std::string(def.name)); it != sweep.values.end()) {
      axes.emplace_back(def.name, &it->second);
    }
  }
  std::vector<std::uint64_t> seeds{0};
  if (auto it = sweep.values.find("seeds"); it != sweep.values.end()) {
    seeds.clear();
    for (const auto& s : it->second) seeds.push_back(parse_count("seeds", s));
  }

  ExperimentPlan plan;
  std::vector<std::size_t> pick(axes.size(), 0);
  while (true) {
    RunConfig config;
    bool checkpoint = false;
    for (std::size_t a = 0; a < axes.size(); ++a) apply(config, checkpoint, axes[a].first, (*axes[a].second)[pick[a]]);
    if (!config.overrides.batch) config.overrides.batch = defaults_for(config.benchmark).batch;
    for (std::uint64_t seed : seeds) {
      PlanCell cell;
      cell.config = config;
      cell.config.seeds = {seed};
      cell.seed = seed;
      cell.checkpoint = checkpoint;
      cell.run_id = make_run_id(config, seed, checkpoint);
      plan.cells.push_back(std::move(cell));
    }
    // Odometer over the axes, last axis fastest.
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++pick[a] < axes[a].second->size()) break;
      pick[a] = 0;
      if (a == 0) return plan;
    }
    if (axes.empty()) return plan;
  }
}

ExperimentPlan parse_config(const std::filesystem::path& path) { return expand(parse_config_file(path)); }

std::string canonical_run_text(const RunConfig& c, bool checkpoint) {
  std::ostringstream out;
  auto line = [&](std::string_view key, const std::string& value) { out << key << " = " << value << '\n'; };
  auto opt = [&](std::string_view key, const std::optional<std::size_t>& v) {
    if (v) line(key, std::to_string(*v));
  };
  line("benchmark", std::string(to_string(c.benchmark)));
  line("method", std::string(to_string(c.method)));
  line("activation", std::string(to_string(c.base)));
  line("gate", std::string(to_string(c.gate)));
  line("granularity", std::string(to_string(c.granularity)));
  line("lr", format_real(c.lr));
  opt("batch", c.overrides.batch);
  opt("tasks", c.overrides.tasks);
  opt("epochs", c.overrides.epochs);
  opt("images", c.overrides.images);
  opt("test_images", c.overrides.test_images);
  line("shrink_p", format_real(c.intervention.shrink_p));
  line("noise_sigma", format_real(c.intervention.noise_sigma));
  line("l2_lambda", format_real(c.intervention.l2_lambda));
  line("sp_include_alpha", c.intervention.sp_include_alpha ? "true" : "false");
  line("l2_include_alpha", c.intervention.l2_include_alpha ? "true" : "false");
  line("probe_cap", std::to_string(c.probe_cap));
  line("srank_delta", format_real(c.srank_delta));
  line("metrics", c.metrics ? "true" : "false");
  line("checkpoint", checkpoint ? "true" : "false");
  return out.str();
}

std::string make_run_id(const RunConfig& config, std::uint64_t seed, bool checkpoint) {
  const std::uint64_t h = mix64(hash_bytes(canonical_run_text(config, checkpoint) + "seed = " + std::to_string(seed)));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string method_label(const RunConfig& config) {
  std::string label(to_string(config.method));
  if (config.method != Method::deep_linear && config.base != BaseKind::relu) {
    label += "-" + std::string(to_string(config.base));
  }
  if (config.method == Method::adalin) {
    if (config.gate != GateKind::cosine) label += "-gate=" + std::string(to_string(config.gate));
    if (config.granularity != Granularity::neuron) label += "-" + std::string(to_string(config.granularity));
  }
  return label;
}

}  // namespace plasticity
