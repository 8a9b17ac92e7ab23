#pragma once

#include <cstdint>

namespace invpress {

inline constexpr const char* kGeneratorName = "splitmix64";

/// SplitMix64: tiny, splittable, and bit-identical across platforms, which
/// keeps seeded property reports replayable byte for byte.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent stream for a sub-task.
  SplitMix64 split() { return SplitMix64(next() ^ 0x5851F42D4C957F2DULL); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  long uniform_int(long lo, long hi) {
    return lo + static_cast<long>(next() % static_cast<uint64_t>(hi - lo + 1));
  }

  bool coin() { return (next() & 1) != 0; }

  /// Uniform magnitude in [lo_mag, hi_mag] with random sign.
  double signed_uniform(double lo_mag, double hi_mag) {
    const double v = uniform(lo_mag, hi_mag);
    return coin() ? v : -v;
  }

 private:
  uint64_t state_;
};

}  // namespace invpress
