#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace plasticity {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a, used to turn purpose tags and config text into seeds.
std::uint64_t hash_bytes(std::string_view bytes);

/// Counter-based generator: draw i is mix64(key + i * golden_gamma), so any
/// stream is fully determined by its key. derive() gives independent child
/// streams keyed by (purpose, index) without touching this stream's counter,
/// which is how a single task can be regenerated without replaying the
/// tasks before it.
///
/// Distributions are implemented here rather than through <random> because
/// the standard distributions are not specified bit-for-bit across library
/// implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  Rng derive(std::string_view purpose, std::uint64_t index = 0) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller; consumes two draws.
  double normal();
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace plasticity
