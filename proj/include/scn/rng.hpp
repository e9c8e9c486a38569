#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace scn {

/// Deterministic 64-bit generator: xoshiro256** seeded through splitmix64.
///
/// All randomness in the library (weight init, shuffling, synthetic data,
/// sampling) flows through this class so that runs are bit-reproducible for a
/// given seed on any platform. No <random> distributions are used anywhere;
/// their output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();

  /// Uniform float in [0, 1) with 24 random bits.
  float next_float();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  uint64_t uniform_int(uint64_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  uint64_t s_[4];
};

/// Derives an independent stream seed for a named purpose ("init/top",
/// "shuffle/epoch.12", ...) so components are individually reproducible.
uint64_t derive_seed(uint64_t base_seed, std::string_view purpose);

}  // namespace scn
