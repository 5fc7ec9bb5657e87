#include "cobalt/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace cobalt {

const char* kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Matern1: return "matern1";
    case KernelKind::Matern3: return "matern3";
    case KernelKind::Matern5: return "matern5";
    case KernelKind::SqExp: return "sqexp";
  }
  return "?";
}

KernelKind kernel_from_name(const std::string& name) {
  if (name == "matern1") return KernelKind::Matern1;
  if (name == "matern3") return KernelKind::Matern3;
  if (name == "matern5") return KernelKind::Matern5;
  if (name == "sqexp") return KernelKind::SqExp;
  throw std::invalid_argument("unknown kernel: " + name);
}

void KernelSpec::validate() const {
  if (!(signal_var > 0.0)) {
    throw std::invalid_argument("kernel signal variance must be positive");
  }
  if (lengthscales.size() == 0 || !(lengthscales.array() > 0.0).all()) {
    throw std::invalid_argument("kernel lengthscales must be positive");
  }
}

double scaled_distance(const KernelSpec& spec, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
  if (a.size() != spec.lengthscales.size() || b.size() != a.size()) {
    throw std::invalid_argument("scaled_distance: dimension mismatch");
  }
  return std::sqrt(
      ((a - b).array() / spec.lengthscales.array()).square().sum());
}

double kernel_of_r(const KernelSpec& spec, double r) {
  const double s2 = spec.signal_var;
  switch (spec.kind) {
    case KernelKind::Matern1:
      return s2 * std::exp(-r);
    case KernelKind::Matern3: {
      double sr = std::sqrt(3.0) * r;
      return s2 * (1.0 + sr) * std::exp(-sr);
    }
    case KernelKind::Matern5: {
      double sr = std::sqrt(5.0) * r;
      return s2 * (1.0 + sr + sr * sr / 3.0) * std::exp(-sr);
    }
    case KernelKind::SqExp:
      return s2 * std::exp(-0.5 * r * r);
  }
  return 0.0;
}

double kernel_w(const KernelSpec& spec, double r) {
  const double s2 = spec.signal_var;
  switch (spec.kind) {
    case KernelKind::Matern1:
      // not differentiable at r = 0; gradient defined as 0 there
      return r == 0.0 ? 0.0 : -s2 * std::exp(-r) / r;
    case KernelKind::Matern3:
      return -3.0 * s2 * std::exp(-std::sqrt(3.0) * r);
    case KernelKind::Matern5:
      return -(5.0 / 3.0) * s2 * (1.0 + std::sqrt(5.0) * r) *
             std::exp(-std::sqrt(5.0) * r);
    case KernelKind::SqExp:
      return -s2 * std::exp(-0.5 * r * r);
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
  spec.validate();
  return kernel_of_r(spec, scaled_distance(spec, a, b));
}

}  // namespace cobalt
