// Moment-based chance-constraint machinery: first-order Taylor moments of
// the grey-box constraints under the surrogate posterior, the probabilistic
// explicit-set residuals, the trust-level schedule, and the two-sided
// transform for equality constraints.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cobalt/gp.hpp"
#include "cobalt/greybox.hpp"

namespace cobalt {

struct TrustSchedule {
  enum class Mode { LinearToZero, Constant };
  Mode mode = Mode::LinearToZero;
  double initial = -3.0;  // tau_0
  int horizon = 1;        // N
  // optional per-constraint initial levels; empty means the shared schedule
  std::vector<double> per_constraint_initial;

  // tau_{i,n}; LinearToZero gives tau_0 (1 - n/N)
  double level(int constraint, int n) const;
};

// epsilon = 1 - Phi(tau)
double violation_prob(double tau);
// tau = Phi^{-1}(1 - epsilon)
double trust_from_violation(double eps);

struct ConstraintMoments {
  double mean = 0.0;
  double sd = 0.0;  // smoothed: sqrt(var + delta^2) - delta
  Eigen::VectorXd mean_grad;  // wrt x
  Eigen::VectorXd sd_grad;    // wrt x
};

// Taylor moments of g_i (or h_i when equality is set) at x under the
// posterior of the black box at A x.
ConstraintMoments constraint_moments(const GreyBoxProblem& problem,
                                     const std::vector<GPModel>& models,
                                     const Eigen::VectorXd& x, int i,
                                     bool equality = false,
                                     bool with_gradients = true);

// r_i = mu_i + tau_i sd_i for inequality constraints
Eigen::VectorXd feasibility_residuals(const std::vector<ConstraintMoments>& m,
                                      const Eigen::VectorXd& tau);

// residual |mu_i| + tau_i sd_i encoding the two-sided transform; requires
// tau <= 0 (positive trust levels make the transform infeasible everywhere)
Eigen::VectorXd equality_residuals(const std::vector<ConstraintMoments>& m,
                                   const Eigen::VectorXd& tau);

// All residuals (inequalities then equalities) with their Jacobian, in the
// shape the local solver consumes.
struct ResidualSet {
  Eigen::VectorXd values;
  Eigen::MatrixXd jacobian;  // rows follow values
};

ResidualSet all_residuals(const GreyBoxProblem& problem,
                          const std::vector<GPModel>& models,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& tau_ineq,
                          const Eigen::VectorXd& tau_eq,
                          bool with_gradients = true);

}  // namespace cobalt
