#pragma once

#include <cstdint>
#include <random>

namespace mcperm {

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` under `parent`. Injective in `index` for a fixed parent.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) + index);
}

/// Sub-stream tags. Each consumer of randomness derives its own stream so that
/// adding one consumer never perturbs another.
enum class Stream : std::uint64_t { Permutations = 0, Randomization = 1, Data = 2, Test = 3 };

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream) {
  return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

/// mt19937_64 with platform-independent bounded and unit-interval draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on {0, ..., bound - 1}; bound >= 1. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t bound) {
    auto m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform on the open interval (0, 1).
  double open_unit() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return open_unit() < p; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace mcperm
