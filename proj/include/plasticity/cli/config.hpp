#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/trainer/trainer.hpp"

namespace plasticity {

/// Parsed experiment file. Every key maps to one or more canonical values;
/// a key with several values is a sweep axis.
///
///   benchmark    = random_label_mnist        (required)
///   method       = baseline, adalin          (required)
///   activation   = relu | tanh | gelu | identity
///   gate         = cosine | linear | quadratic | none | interpolation
///   granularity  = neuron | layer | network
///   lr, batch, seeds, tasks, epochs, images, test_images,
///   shrink_p, noise_sigma, l2_lambda, sp_include_alpha, l2_include_alpha,
///   probe_cap, srank_delta, metrics, checkpoint
///
/// Lines are "key = v1, v2"; '#' starts a comment.
struct ConfigSweep {
  std::map<std::string, std::vector<std::string>> values;

  friend bool operator==(const ConfigSweep&, const ConfigSweep&) = default;
};

struct PlanCell {
  RunConfig config;  // config.seeds holds exactly this cell's seed
  std::uint64_t seed = 0;
  std::string run_id;
  bool checkpoint = false;
};

struct ExperimentPlan {
  std::vector<PlanCell> cells;
};

// Throws ConfigError naming the offending key or line.
ConfigSweep parse_config_text(std::string_view text);
ConfigSweep parse_config_file(const std::filesystem::path& path);
// Keys in schema order, one per line. parse_config_text() of the result
// gives back an equal sweep.
std::string serialize_config(const ConfigSweep& sweep);

// Cross product of every sweep axis, seeds innermost. Unset keys take the
// benchmark defaults (lr 1e-2, batch 16 or 32 for class-split).
ExperimentPlan expand(const ConfigSweep& sweep);
ExperimentPlan parse_config(const std::filesystem::path& path);

// Every field of a single run, one "key = value" line each, seeds excluded.
std::string canonical_run_text(const RunConfig& config, bool checkpoint = false);
// 16 hex digits hashed from the canonical text and the seed.
std::string make_run_id(const RunConfig& config, std::uint64_t seed, bool checkpoint = false);
// Method name plus whichever activation options differ from the defaults,
// e.g. "adalin-gate=none".
std::string method_label(const RunConfig& config);

}  // namespace plasticity
