#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "holterisk/mathutil.hpp"

namespace holterisk {

// Seeded random stream. All distributions are sampled by inverse transform on
// a 53-bit uniform, so a given seed produces the same stream on every platform
// and standard-library version. Replicate-parallel work derives one child
// stream per replicate; results are then independent of scheduling.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  // Independent stream keyed by (this seed, stream index).
  SplitRng child(std::uint64_t stream) const {
    return SplitRng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free scaling is fine here; n is far below 2^53 in practice.
    return std::uint64_t(uniform() * double(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Standard normal via the inverse CDF.
  double normal() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return normal_quantile(u);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer.
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace holterisk
