// Deterministic sample-average enrichment subproblem and its multistart
// augmented-Lagrangian solver. The objective and residual callables are
// frozen functions of the whitened sample set, so repeated solves with the
// same seed are bit-identical.

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cobalt/acquisition.hpp"
#include "cobalt/feasibility.hpp"

namespace cobalt {

inline constexpr double kNlpTol = 1e-6;

struct SAAProblem {
  // value and gradient of the acquisition to MAXIMIZE
  std::function<AcquisitionValue(const Eigen::VectorXd&)> objective;
  // residuals r(x) <= 0 with Jacobian; empty values for box-only problems
  std::function<ResidualSet(const Eigen::VectorXd&, bool)> residuals;
  Eigen::VectorXd lower, upper;
  int num_residuals = 0;
  double tol = kNlpTol;
  // effort caps for the augmented-Lagrangian solver
  int max_outer = 12;
  int max_inner = 60;
};

// Builds the subproblem for the current context/trust levels; its objective
// equals mwb2_cf under the same frozen XiSample.
SAAProblem assemble_saa(const GreyBoxProblem& problem,
                        const std::vector<GPModel>& models,
                        const AcquisitionContext& ctx,
                        const Eigen::VectorXd& tau_ineq,
                        const Eigen::VectorXd& tau_eq = Eigen::VectorXd());

struct StartOutcome {
  Eigen::VectorXd x;
  double objective = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolveReport {
  Eigen::VectorXd best;
  double best_objective = 0.0;
  double best_max_residual = 0.0;
  bool restoration_used = false;
  std::vector<StartOutcome> starts;
};

// Multistart solve: quasi-random starts plus any caller-provided extras
// (e.g. the best observed point). Deterministic given the seed.
SolveReport solve_multistart(const SAAProblem& saa, int n_starts,
                             std::uint64_t seed,
                             const std::vector<Eigen::VectorXd>& extra_starts =
                                 {});

// Best feasible objective in the dataset; +inf when nothing is feasible.
double update_incumbent(const ObservationSet& observations);

// generic bound-constrained minimizer used by the solver and the testbed
// oracle: projected Barzilai-Borwein gradient descent with backtracking
struct InnerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  int iterations = 0;
};

InnerResult minimize_box(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>&
        value_and_grad,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, int max_iters, double tol);

}  // namespace cobalt
