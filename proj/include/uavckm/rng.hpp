#pragma once

// Seeded random source and the seed-forking scheme shared by every stage.
//
// Distributions are implemented here rather than taken from <random> because
// the standard leaves std::normal_distribution and friends implementation
// defined; only the mt19937_64 engine itself is bit-exact across toolchains.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace uavckm {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Pipeline stages that draw randomness. The numeric values are part of the
/// reproducibility contract: changing one changes every downstream artifact.
enum class Stream : std::uint64_t {
  environment = 1,
  dataset = 2,
  split = 3,
  wgan = 4,
  synthesis = 5,
  ckm = 6,
  ppo = 7,
  evaluation = 8,
  bcd = 9,
  oracle = 10,
};

/// Derives the seed of (stream, index) from a global seed:
///   fork(g, s, i) = mix64(mix64(g ^ mix64(s)) + i)
/// Index is the worker / run / episode counter within a stage.
inline constexpr std::uint64_t fork_seed(std::uint64_t global, Stream stream,
                                         std::uint64_t index = 0) {
  return mix64(mix64(global ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n) {
    // Lemire's multiply-shift; bias is below 2^-64 * n.
    const unsigned __int128 product =
        static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n);
    return static_cast<std::size_t>(product >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_{0.0};
  bool has_spare_{false};
};

}  // namespace uavckm
