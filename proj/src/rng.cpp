#include "rng.hpp"

#include <cmath>

#include "error.hpp"

namespace depolar {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::argument, "uniform_below: bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % bound;
}

long long Rng::poisson(double mean) {
  if (mean < 0.0) fail(ErrorCode::argument, "poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth's product method.
    const double limit = std::exp(-mean);
    long long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }
  // PTRS transformed rejection (Hormann 1993), valid for mean >= 10.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<long long>(kf);
    }
  }
}

double Rng::power_law(double exponent, double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) fail(ErrorCode::argument, "power_law: need 0 < lo <= hi");
  if (exponent == 1.0) {
    return lo * std::exp(uniform01() * std::log(hi / lo));
  }
  const double e = 1.0 - exponent;
  const double a = std::pow(lo, e);
  const double b = std::pow(hi, e);
  return std::pow(a + uniform01() * (b - a), 1.0 / e);
}

}  // namespace depolar
