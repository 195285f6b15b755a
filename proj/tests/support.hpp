#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "plasticity/rng.hpp"
#include "plasticity/tensor.hpp"

namespace test_support {

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("PLASTICITY_DATA_DIR")) return env;
  return PLASTICITY_TEST_DATA_DIR;
}

inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline plasticity::Tensor random_tensor(plasticity::Shape shape, plasticity::Rng& rng, double lo = -1.0,
                                        double hi = 1.0) {
  plasticity::Tensor t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("plasticity-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test_support
