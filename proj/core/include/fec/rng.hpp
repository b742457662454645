#pragma once

#include <cstdint>
#include <random>

namespace fec {

// Seeded random stream. Every stochastic routine in the library takes one of
// these explicitly; replica r of a run uses Rng(base_seed + r).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }
  double exponential() { return -std::log1p(-unit_(engine_)); }
  bool bernoulli(double p) { return unit_(engine_) < p; }

  // Uniform integer in [0, n), rejection sampled so the law does not depend
  // on library internals.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fec
