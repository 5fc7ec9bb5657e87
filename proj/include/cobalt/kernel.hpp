// Stationary Matern-family covariance functions with anisotropic (per input
// dimension) lengthscales, plus the derivative quantities needed for both
// hyperparameter estimation and posterior gradients.

#pragma once

#include <Eigen/Dense>

namespace cobalt {

enum class KernelKind { Matern1, Matern3, Matern5, SqExp };

const char* kernel_name(KernelKind kind);
KernelKind kernel_from_name(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::SqExp;
  double signal_var = 1.0;          // zeta^2
  Eigen::VectorXd lengthscales;     // lambda_1..lambda_d, strictly positive

  void validate() const;
};

// scaled distance r(z,z') = sqrt(sum_i (z_i - z'_i)^2 / lambda_i^2)
double scaled_distance(const KernelSpec& spec, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b);

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b);

// k as a function of r alone
double kernel_of_r(const KernelSpec& spec, double r);

// w(r) = k'(r) / r, continuously extended to r = 0 where possible.
// Matern nu=1 has no derivative at r=0; its w is defined as 0 there.
double kernel_w(const KernelSpec& spec, double r);

}  // namespace cobalt
