// Outer optimization loop: Latin-hypercube initialization, per-iteration
// surrogate training, trust scheduling, acquisition scaling, subproblem
// solve, evaluation, and incumbent/regret tracking. Also hosts the
// black-box baselines (EI, PI, random search) used for comparison runs.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cobalt/feasibility.hpp"
#include "cobalt/gp.hpp"
#include "cobalt/greybox.hpp"
#include "cobalt/kernel.hpp"

namespace cobalt {

enum class Variant { mWB2CF, EICF, BlackBoxEI, BlackBoxPI, Random };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct RunConfig {
  int budget = 60;       // total black-box evaluations, init included
  int init_count = 0;    // 0 selects the default max{3, n_z + 1}
  int m_samples = 100;   // frozen posterior draws per acquisition estimate
  double beta = 100.0;   // scale numerator multiplier
  double tau0 = -3.0;    // initial trust level
  KernelKind kernel = KernelKind::Matern5;
  int n_starts = 10;     // subproblem multistarts
  std::uint64_t seed = 0;
  Variant variant = Variant::mWB2CF;

  int resolved_init(int dim_z) const;
  void validate(int dim_z) const;
};

struct IterationRecord {
  Eigen::VectorXd x, y;
  double objective = 0.0;
  Eigen::VectorXd constraint_values;
  bool feasible = false;
  double incumbent = std::numeric_limits<double>::infinity();
  // NaN while the reference optimum is unknown; +inf incumbent gives +inf
  double log10_regret = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd tau;
  double scale = 0.0;  // s_n; 0 for initialization and baselines
  // timing sidecar data (seconds, monotonic clock)
  std::vector<double> t_gp;  // one entry per trained surrogate output
  double t_opt = 0.0;
  double t_eval = 0.0;
};

struct RunRecord {
  std::string problem;
  RunConfig config;
  bool aborted = false;
  std::string abort_reason;
  std::vector<IterationRecord> iterations;

  double final_incumbent() const;
};

// thrown when an incumbent undercuts the reference optimum beyond tolerance
class OracleInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log10(max(incumbent - true_min, 1e-12)); +inf incumbent passes through
double log10_regret(double incumbent, double true_min);

// initial design: one point per Latin stratum in every coordinate
Eigen::MatrixXd lhs_init(const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, int count,
                         std::uint64_t seed);

// Runs one experiment (any variant) with exactly config.budget black-box
// evaluations. true_min, when finite or known, enables regret tracking.
RunRecord run_experiment(
    const GreyBoxProblem& problem, const RunConfig& config,
    double true_min = std::numeric_limits<double>::quiet_NaN());

}  // namespace cobalt
