// Composite-function acquisition values and gradients. The posterior of the
// black box at A x is pushed through the white-box objective by Monte Carlo
// over a frozen set of whitened standard-normal draws, so every acquisition
// value is a deterministic function of (x, xi seed).

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "cobalt/gp.hpp"
#include "cobalt/greybox.hpp"

namespace cobalt {

// Frozen i.i.d. standard-normal draws xi^(1)..xi^(M), one row per sample.
struct XiSample {
  Eigen::MatrixXd draws;  // M x n_y
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(draws.rows()); }

  static XiSample generate(int m, int n_y, std::uint64_t seed);
};

struct AcquisitionContext {
  const GreyBoxProblem* problem = nullptr;
  const std::vector<GPModel>* models = nullptr;  // one per output, shared Z
  double incumbent = std::numeric_limits<double>::infinity();
  double scale = 0.0;  // s_n; must be 0 while the incumbent is infinite
  double beta = 100.0;
  XiSample xi;

  MOGPosterior posterior_at(const Eigen::VectorXd& x,
                            bool with_gradients = false) const;
};

// analytic EI for a scalar Gaussian posterior
double ei_analytic(double mean, double sd, double incumbent);
// analytic probability of improvement
double pi_analytic(double mean, double sd, double incumbent);

// Monte Carlo EI-CF estimate at x (>= 0, deterministic given the XiSample)
double ei_cf(const AcquisitionContext& ctx, const Eigen::VectorXd& x);

// predicted mean of the overall objective, same frozen samples
double objective_mean(const AcquisitionContext& ctx, const Eigen::VectorXd& x);

struct AcquisitionValue {
  double value;
  Eigen::VectorXd gradient;  // wrt x
};

// scale * EI-CF(x) - objective_mean(x), with its almost-everywhere gradient
AcquisitionValue mwb2_cf(const AcquisitionContext& ctx,
                         const Eigen::VectorXd& x);

// EI-CF value and gradient (the hinged part alone)
AcquisitionValue ei_cf_with_grad(const AcquisitionContext& ctx,
                                 const Eigen::VectorXd& x);

// Scaling factor s_n from the candidate approximately maximizing EI-CF.
// Returns 0 when the incumbent is infinite.
double compute_scale(const AcquisitionContext& ctx,
                     const std::vector<Eigen::VectorXd>& start_candidates);

}  // namespace cobalt
