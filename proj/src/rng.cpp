#include "cobalt/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cobalt {

double SplitMix64::next_normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  // draw u1 in (0,1] to keep log finite
  double u1 = 1.0 - next_uniform();
  double u2 = next_uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  have_cached_ = true;
  return radius * std::cos(angle);
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  }
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley step
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

Eigen::MatrixXd latin_hypercube(const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, int count,
                                SplitMix64& rng) {
  const int dim = static_cast<int>(lower.size());
  Eigen::MatrixXd points(count, dim);
  std::vector<int> perm(count);
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < count; ++i) perm[i] = i;
    // Fisher-Yates
    for (int i = count - 1; i > 0; --i) {
      int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int i = 0; i < count; ++i) {
      double u = (perm[i] + rng.next_uniform()) / count;
      points(i, d) = lower(d) + (upper(d) - lower(d)) * u;
    }
  }
  return points;
}

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                           31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double halton_element(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

}  // namespace

Eigen::MatrixXd shifted_halton(const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, int count,
                               SplitMix64& rng) {
  const int dim = static_cast<int>(lower.size());
  if (dim > static_cast<int>(std::size(kPrimes))) {
    throw std::invalid_argument("shifted_halton: dimension too large");
  }
  Eigen::VectorXd shift(dim);
  for (int d = 0; d < dim; ++d) shift(d) = rng.next_uniform();
  Eigen::MatrixXd points(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int d = 0; d < dim; ++d) {
      double u = halton_element(i + 1, kPrimes[d]) + shift(d);
      u -= std::floor(u);
      points(i, d) = lower(d) + (upper(d) - lower(d)) * u;
    }
  }
  return points;
}

}  // namespace cobalt
