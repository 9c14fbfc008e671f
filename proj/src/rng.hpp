#pragma once

#include <cstdint>
#include <random>

namespace depolar {

/// SplitMix64 step; used to derive independent stream seeds from a master
/// seed. The engine itself is std::mt19937_64, whose output sequence is
/// pinned by the standard, so seeded runs reproduce exactly.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic RNG with the few distributions this project needs.
/// std::random distributions are implementation-defined, so the sampling
/// code here is spelled out by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01();

  double uniform(double lo, double hi);

  /// Uniform integer in [0, bound), rejection-sampled (no modulo bias).
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Poisson sample; Knuth product for small means, PTRS transformed
  /// rejection (Hormann) for large ones.
  long long poisson(double mean);

  /// Sample with density proportional to x^(-exponent) on [lo, hi].
  double power_law(double exponent, double lo, double hi);

  /// Fisher-Yates shuffle of [first, last).
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = uniform_below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace depolar
