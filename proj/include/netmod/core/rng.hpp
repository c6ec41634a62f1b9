#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace netmod {

// splitmix64; used to derive independent seeds from (base, index) pairs.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t index) { return mix64(base ^ mix64(index)); }

// Thin wrapper around mt19937_64 with hand-rolled transforms so that a seed
// pins the exact stream independent of the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_index(uint64_t n) {
    // rejection-free modulo is fine here; n is always tiny vs 2^64
    return engine_() % n;
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Box-Muller, one value per call (pairs are not cached so the stream
  // stays a pure function of the draw count).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Pareto with minimum `scale` and tail index `shape` (> 1 for finite mean).
  double pareto(double shape, double scale) {
    return scale * std::pow(1.0 - uniform(), -1.0 / shape);
  }

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// standard normal CDF
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

}  // namespace netmod
