#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace uavsc {

/// Seedable generator with platform-independent uniform draws.
///
/// std::uniform_real_distribution is implementation-defined, so the
/// conversions here are done by hand to keep CSV output reproducible
/// across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  /// Seeds from (seed, stream) so that one user seed can drive several
  /// independent generators (environment, exploration, initialization).
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  void reseed(std::uint64_t seed) { engine_.seed(seed); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace uavsc
