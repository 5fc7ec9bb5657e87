// Deterministic random / quasi-random utilities shared by all modules.
//
// Every stochastic component of a run (LHS design, xi samples, multistart
// points, MLE initializations) draws from a stream derived from one base
// seed, so replays are bit-identical.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace cobalt {

// splitmix64; used both as a generator and to derive child stream seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
  }

  // Box-Muller; implementation-independent unlike std::normal_distribution.
  double next_normal();

  // child stream for a named sub-component
  SplitMix64 fork(std::uint64_t stream_id) {
    SplitMix64 mix(state_ ^ (0x2545f4914f6cdd1dULL * (stream_id + 1)));
    return SplitMix64(mix.next_u64());
  }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Standard normal CDF.
double normal_cdf(double t);
// Standard normal density.
double normal_pdf(double t);
// Inverse standard normal CDF (Acklam's rational approximation plus one
// Halley refinement; accurate to ~1e-15 on (0,1)).
double normal_quantile(double p);

// Latin hypercube design: `count` points in the box [lower, upper], one
// point per stratum in every coordinate.
Eigen::MatrixXd latin_hypercube(const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, int count,
                                SplitMix64& rng);

// Halton sequence with a random (Cranley-Patterson) shift, mapped into the
// box. Deterministic given the rng state at entry.
Eigen::MatrixXd shifted_halton(const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, int count,
                               SplitMix64& rng);

}  // namespace cobalt
