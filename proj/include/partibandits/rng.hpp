#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pb {

/// Seedable generator whose independent streams are derived from a master seed
/// and an index path, so replications never depend on execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix(seed)) {}

  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = mix(master);
    for (std::uint64_t p : path) state = mix(state ^ mix(p + 0x632be59bd9b4e019ULL));
    return Rng(state);
  }

  /// Uniform in [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double beta(double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(engine_);
    const double y = std::gamma_distribution<double>(b, 1.0)(engine_);
    return x / (x + y);
  }

  std::mt19937_64& engine() { return engine_; }

  /// SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pb
