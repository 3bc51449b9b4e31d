#pragma once

#include <cstdint>
#include <random>

#include "irsse/types.hpp"

namespace irsse {

/// Purposes a trial stream can be split into. Each gets an independent
/// engine so that, e.g., the direct channels do not depend on N.
enum class StreamTag : std::uint64_t {
  layout = 1,
  direct_channels = 2,
  irs_channels = 3,
  initial_phase = 4,
  randomization = 5,
  baseline = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random stream derived from (seed, trial, tag) by hashing, so
/// a trial's draws never depend on which worker ran it or in what order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : engine_(splitmix64(key)) {}

  static RandomStream derive(std::uint64_t seed, std::uint64_t trial, StreamTag tag);

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  /// Child stream for nested randomness (e.g. one per bisection probe).
  RandomStream split(std::uint64_t salt) { return RandomStream(engine_() ^ splitmix64(salt)); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace irsse
