#pragma once

// Reproducible random streams. The algorithms are fixed (SplitMix64 seeding,
// xoshiro256**, Box-Muller) rather than taken from <random>, whose
// distributions are implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

#include "junglekit/core/errors.hpp"
#include "junglekit/core/fnv.hpp"

namespace junglekit::sim {

struct SplitMix64 {
  std::uint64_t state;

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept {
    SplitMix64 sm{seed};
    for (auto& word : s_) word = sm.next();
  }

  /// Independent stream for a named entity ("ops", "user:17", ...).
  static constexpr Rng stream(std::uint64_t seed, std::string_view name) noexcept {
    return Rng(seed ^ fnv1a64(name));
  }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n); unbiased by rejection.
  constexpr std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ContractViolation("Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  constexpr bool chance(double p) noexcept { return uniform() < p; }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double lognormal(double median, double sigma) noexcept { return median * std::exp(sigma * normal()); }

  /// Pareto with scale xmin and shape alpha, by inverse CDF.
  double pareto(double alpha, double xmin) noexcept { return xmin * std::pow(1.0 - uniform(), -1.0 / alpha); }

  /// Index drawn proportionally to non-negative weights with positive sum.
  std::size_t weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw ContractViolation("Rng::weighted: weights must have a positive sum");
    double x = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

}  // namespace junglekit::sim
