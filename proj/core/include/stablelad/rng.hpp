#pragma once

#include <cmath>
#include <cstdint>

namespace stablelad {

// Counter-based random numbers built on the SplitMix64 finalizer.
//
// Seed-derivation contract (all samplers in this library follow it):
//   * substream_seed(seed, index) opens an independent stream for logical
//     unit `index` (one noise increment, one replication, ...).
//   * within a stream, draws are sequential SplitMix64 outputs.
// Because streams are derived by counter and never shared, batches can be
// generated in any chunking (or in parallel) with bit-identical results.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + kGoldenGamma * (index + 1));
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform draw strictly inside (0,1).
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential() { return -std::log(uniform01()); }

  /// Standard normal via Box-Muller (two uniforms per draw).
  double normal() {
    const double u = uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
  }

 private:
  std::uint64_t state_;
};

}  // namespace stablelad
