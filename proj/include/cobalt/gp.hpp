// Single-output Gaussian process regression trained by maximum likelihood,
// and the independent multi-output wrapper used for the black-box surrogate.
//
// Inputs are normalized to the unit cube and targets standardized to zero
// mean / unit variance before training; predictions are reported in the
// original units.

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cobalt/kernel.hpp"

namespace cobalt {

class IllConditionedKernel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NoiseMode {
  FixedJitter,   // sigma_v^2 = 1e-8 in standardized units (noiseless data)
  Estimate,      // log sigma_v^2 is an MLE variable
};

struct GPModel {
  KernelSpec kernel;           // in normalized-input units
  double noise_var = 1e-8;     // standardized-output units
  double jitter = 0.0;         // extra diagonal added to factorize

  Eigen::MatrixXd train_inputs;   // normalized, n x d
  Eigen::VectorXd train_targets;  // standardized, n

  // normalization constants
  Eigen::VectorXd input_lo, input_range;
  double output_mean = 0.0;
  double output_scale = 1.0;

  // cached factorization: Sigma_T = L L^T, alpha = Sigma_T^{-1} T
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;

  int size() const { return static_cast<int>(train_targets.size()); }

  Eigen::VectorXd normalize(const Eigen::VectorXd& z) const;

  // posterior mean alone (skips the variance triangular solve)
  double predict_mean(const Eigen::VectorXd& z) const;
  // posterior mean and variance at z (original units; variance clamped >= 0)
  void predict(const Eigen::VectorXd& z, double& mean, double& var) const;
  // additionally d(mean)/dz and d(var)/dz
  void predict_with_grad(const Eigen::VectorXd& z, double& mean, double& var,
                         Eigen::VectorXd& dmean, Eigen::VectorXd& dvar) const;

  double prior_variance_original_units() const {
    return kernel.signal_var * output_scale * output_scale;
  }
};

struct LogMarginalLikelihood {
  double value;
  Eigen::VectorXd grad;  // wrt log-hyperparameters
};

// Eq.-(16)-style log-likelihood of standardized targets T under the kernel
// built from log-hyperparameters theta = [log lambda_1.., log zeta^2
// (, log sigma_v^2)]. Gradient via the trace identity.
LogMarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& Z,
                                              const Eigen::VectorXd& T,
                                              KernelKind kind,
                                              const Eigen::VectorXd& theta,
                                              NoiseMode mode,
                                              bool with_grad = true);

struct TrainOptions {
  KernelKind kind = KernelKind::SqExp;
  NoiseMode noise = NoiseMode::FixedJitter;
  std::uint64_t seed = 0;
  int global_samples = 64;  // quasi-random log-space samples
  int refine_top = 4;       // gradient-ascent refinement of the best starts
  int max_ascent_iters = 60;
  // explicit input box for normalization; defaults to the data min/max
  std::optional<Eigen::VectorXd> input_lower, input_upper;
};

GPModel train_gp(const Eigen::MatrixXd& Z, const Eigen::VectorXd& T,
                 const TrainOptions& opts);

// Builds a model with fixed hyperparameters (normalized units), no MLE.
GPModel fit_gp_fixed(const Eigen::MatrixXd& Z, const Eigen::VectorXd& T,
                     const KernelSpec& spec, double noise_var,
                     const std::optional<Eigen::VectorXd>& input_lower = {},
                     const std::optional<Eigen::VectorXd>& input_upper = {});

// Posterior of the independent multi-output GP at one query z.
struct MOGPosterior {
  Eigen::VectorXd mean;      // n_y
  Eigen::VectorXd var;       // n_y, >= 0
  Eigen::VectorXd sd;        // sqrt(var); the diagonal lower Cholesky factor
  bool has_gradients = false;
  Eigen::MatrixXd mean_jac;  // n_y x n_z
  Eigen::MatrixXd var_jac;   // n_y x n_z
  Eigen::MatrixXd sd_jac;    // n_y x n_z, guarded near var = 0
};

MOGPosterior mogp_posterior(const std::vector<GPModel>& models,
                            const Eigen::VectorXd& z,
                            bool with_gradients = false);

}  // namespace cobalt
