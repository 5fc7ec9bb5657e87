#include "cobalt/feasibility.hpp"

#include <cmath>

#include "cobalt/rng.hpp"

namespace cobalt {

namespace {

// keeps the residual differentiable where the posterior variance vanishes
// (exactly at training points)
constexpr double kSdSmoothing = 1e-10;

double smoothed_sd(double var) {
  return std::sqrt(var + kSdSmoothing * kSdSmoothing) - kSdSmoothing;
}

// posterior means only, no variance solves (used inside FD loops)
Eigen::VectorXd cheap_means(const std::vector<GPModel>& models,
                            const Eigen::VectorXd& z) {
  Eigen::VectorXd mu(models.size());
  for (int j = 0; j < static_cast<int>(models.size()); ++j) {
    mu(j) = models[j].predict_mean(z);
  }
  return mu;
}

// Gradients of the smoothed sds of all constraints at x. The variance part
// is analytic through the posterior; the Taylor coefficients grad_y g_i are
// differentiated by central FD of the (cheap, white-box) constraint
// Jacobians because second derivatives of g are not part of the problem
// contract.
//
// sigma_i^2 = sum_j a_ij^2 var_j with a = grad_y g(x, mu(Ax)).
Eigen::MatrixXd sd_gradients(const GreyBoxProblem& problem,
                             const std::vector<GPModel>& models,
                             const Eigen::VectorXd& x,
                             const MOGPosterior& post, bool equality) {
  const int n_x = problem.dim_x;
  const int count = equality ? problem.num_h : problem.num_g;
  Eigen::MatrixXd jx, jy;
  if (equality) {
    problem.equalities_grad(x, post.mean, jx, jy);
  } else {
    problem.constraints_grad(x, post.mean, jx, jy);
  }
  // d var_j / dx through z = A x
  Eigen::MatrixXd dvar_dx = post.var_jac * problem.selection;  // n_y x n_x
  Eigen::MatrixXd grads(count, n_x);
  for (int k = 0; k < n_x; ++k) {
    double h = 1e-6 * (1.0 + std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    Eigen::VectorXd mup = cheap_means(models, problem.select_inputs(xp));
    Eigen::VectorXd mum = cheap_means(models, problem.select_inputs(xm));
    Eigen::MatrixXd jxp, jyp, jxm, jym;
    if (equality) {
      problem.equalities_grad(xp, mup, jxp, jyp);
      problem.equalities_grad(xm, mum, jxm, jym);
    } else {
      problem.constraints_grad(xp, mup, jxp, jyp);
      problem.constraints_grad(xm, mum, jxm, jym);
    }
    for (int i = 0; i < count; ++i) {
      double dv = 0.0;
      for (int j = 0; j < problem.dim_y; ++j) {
        double da = (jyp(i, j) - jym(i, j)) / (2.0 * h);
        dv += 2.0 * jy(i, j) * post.var(j) * da +
              jy(i, j) * jy(i, j) * dvar_dx(j, k);
      }
      grads(i, k) = dv;
    }
  }
  // chain through the smoothing: d sigma = d var / (2 sqrt(var + delta^2))
  for (int i = 0; i < count; ++i) {
    double v = jy.row(i).transpose().cwiseAbs2().dot(post.var);
    grads.row(i) /= 2.0 * std::sqrt(v + kSdSmoothing * kSdSmoothing);
  }
  return grads;
}

// mean and smoothed sd of constraint i at x, no gradients
void moments_value(const GreyBoxProblem& problem,
                   const std::vector<GPModel>& models,
                   const Eigen::VectorXd& x, int i, bool equality,
                   double& mean, double& sd) {
  MOGPosterior post = mogp_posterior(models, problem.select_inputs(x), false);
  Eigen::VectorXd g = equality ? problem.equalities(x, post.mean)
                               : problem.constraints(x, post.mean);
  Eigen::MatrixXd jx, jy;
  if (equality) {
    problem.equalities_grad(x, post.mean, jx, jy);
  } else {
    problem.constraints_grad(x, post.mean, jx, jy);
  }
  mean = g(i);
  double var = jy.row(i).transpose().cwiseAbs2().dot(post.var);
  sd = smoothed_sd(var);
}

}  // namespace

double TrustSchedule::level(int constraint, int n) const {
  double tau0 = initial;
  if (!per_constraint_initial.empty()) {
    tau0 = per_constraint_initial.at(constraint);
  }
  switch (mode) {
    case Mode::Constant:
      return tau0;
    case Mode::LinearToZero:
      return tau0 * (1.0 - static_cast<double>(n) / horizon);
  }
  return tau0;
}

double violation_prob(double tau) { return 1.0 - normal_cdf(tau); }

double trust_from_violation(double eps) { return normal_quantile(1.0 - eps); }

ConstraintMoments constraint_moments(const GreyBoxProblem& problem,
                                     const std::vector<GPModel>& models,
                                     const Eigen::VectorXd& x, int i,
                                     bool equality, bool with_gradients) {
  const int count = equality ? problem.num_h : problem.num_g;
  if (i < 0 || i >= count) {
    throw std::invalid_argument("constraint_moments: index out of range");
  }
  ConstraintMoments out;
  if (!with_gradients) {
    moments_value(problem, models, x, i, equality, out.mean, out.sd);
    return out;
  }

  MOGPosterior post =
      mogp_posterior(models, problem.select_inputs(x), true);
  Eigen::VectorXd g = equality ? problem.equalities(x, post.mean)
                               : problem.constraints(x, post.mean);
  Eigen::MatrixXd jx, jy;
  if (equality) {
    problem.equalities_grad(x, post.mean, jx, jy);
  } else {
    problem.constraints_grad(x, post.mean, jx, jy);
  }
  out.mean = g(i);
  Eigen::VectorXd a = jy.row(i).transpose();  // grad_y g_i at the mean point
  double var = a.cwiseAbs2().dot(post.var);
  out.sd = smoothed_sd(var);

  // d mean / dx: direct term plus the posterior-mean chain through z = A x
  out.mean_grad =
      jx.row(i).transpose() +
      problem.selection.transpose() * (post.mean_jac.transpose() * a);

  out.sd_grad = sd_gradients(problem, models, x, post, equality)
                    .row(i)
                    .transpose();
  return out;
}

Eigen::VectorXd feasibility_residuals(const std::vector<ConstraintMoments>& m,
                                      const Eigen::VectorXd& tau) {
  if (static_cast<int>(m.size()) != tau.size()) {
    throw std::invalid_argument("feasibility_residuals: size mismatch");
  }
  Eigen::VectorXd r(tau.size());
  for (int i = 0; i < tau.size(); ++i) r(i) = m[i].mean + tau(i) * m[i].sd;
  return r;
}

Eigen::VectorXd equality_residuals(const std::vector<ConstraintMoments>& m,
                                   const Eigen::VectorXd& tau) {
  if (static_cast<int>(m.size()) != tau.size()) {
    throw std::invalid_argument("equality_residuals: size mismatch");
  }
  if (tau.size() > 0 && tau.maxCoeff() > 0.0) {
    throw std::invalid_argument(
        "equality_residuals: trust levels must be non-positive");
  }
  Eigen::VectorXd r(tau.size());
  for (int i = 0; i < tau.size(); ++i) {
    r(i) = std::abs(m[i].mean) + tau(i) * m[i].sd;
  }
  return r;
}

namespace {

// means and smoothed sds of every constraint (inequalities then equalities)
// from one shared posterior evaluation
void stacked_moments(const GreyBoxProblem& problem,
                     const std::vector<GPModel>& models,
                     const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                     Eigen::VectorXd& sd) {
  MOGPosterior post = mogp_posterior(models, problem.select_inputs(x), false);
  const int n_g = problem.num_g;
  const int n_h = problem.num_h;
  mean.resize(n_g + n_h);
  sd.resize(n_g + n_h);
  Eigen::MatrixXd jx, jy;
  if (n_g > 0) {
    mean.head(n_g) = problem.constraints(x, post.mean);
    problem.constraints_grad(x, post.mean, jx, jy);
    for (int i = 0; i < n_g; ++i) {
      sd(i) = smoothed_sd(jy.row(i).transpose().cwiseAbs2().dot(post.var));
    }
  }
  if (n_h > 0) {
    mean.tail(n_h) = problem.equalities(x, post.mean);
    problem.equalities_grad(x, post.mean, jx, jy);
    for (int i = 0; i < n_h; ++i) {
      sd(n_g + i) =
          smoothed_sd(jy.row(i).transpose().cwiseAbs2().dot(post.var));
    }
  }
}

}  // namespace

ResidualSet all_residuals(const GreyBoxProblem& problem,
                          const std::vector<GPModel>& models,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& tau_ineq,
                          const Eigen::VectorXd& tau_eq,
                          bool with_gradients) {
  const int n_g = problem.num_g;
  const int n_h = problem.num_h;
  if (n_h > 0 && tau_eq.size() > 0 && tau_eq.maxCoeff() > 0.0) {
    throw std::invalid_argument(
        "all_residuals: equality trust levels must be non-positive");
  }
  ResidualSet out;
  out.values.resize(n_g + n_h);
  if (n_g + n_h == 0) {
    if (with_gradients) out.jacobian.resize(0, problem.dim_x);
    return out;
  }
  Eigen::VectorXd mean, sd;
  stacked_moments(problem, models, x, mean, sd);
  Eigen::VectorXd tau(n_g + n_h);
  tau.head(n_g) = tau_ineq;
  tau.tail(n_h) = tau_eq;
  for (int i = 0; i < n_g; ++i) out.values(i) = mean(i) + tau(i) * sd(i);
  for (int i = n_g; i < n_g + n_h; ++i) {
    out.values(i) = std::abs(mean(i)) + tau(i) * sd(i);
  }
  if (!with_gradients) return out;

  const int n_x = problem.dim_x;
  out.jacobian.resize(n_g + n_h, n_x);
  // analytic mean gradients from one posterior-with-gradients pass
  MOGPosterior post = mogp_posterior(models, problem.select_inputs(x), true);
  Eigen::MatrixXd jx, jy;
  if (n_g > 0) {
    problem.constraints_grad(x, post.mean, jx, jy);
    for (int i = 0; i < n_g; ++i) {
      Eigen::VectorXd mg =
          jx.row(i).transpose() +
          problem.selection.transpose() *
              (post.mean_jac.transpose() * jy.row(i).transpose());
      out.jacobian.row(i) = mg.transpose();
    }
  }
  if (n_h > 0) {
    problem.equalities_grad(x, post.mean, jx, jy);
    for (int i = 0; i < n_h; ++i) {
      double sign = mean(n_g + i) > 0 ? 1.0 : (mean(n_g + i) < 0 ? -1.0 : 0.0);
      Eigen::VectorXd mg =
          jx.row(i).transpose() +
          problem.selection.transpose() *
              (post.mean_jac.transpose() * jy.row(i).transpose());
      out.jacobian.row(n_g + i) = sign * mg.transpose();
    }
  }
  if (n_g > 0) {
    Eigen::MatrixXd sg = sd_gradients(problem, models, x, post, false);
    for (int i = 0; i < n_g; ++i) {
      out.jacobian.row(i) += tau(i) * sg.row(i);
    }
  }
  if (n_h > 0) {
    Eigen::MatrixXd sg = sd_gradients(problem, models, x, post, true);
    for (int i = 0; i < n_h; ++i) {
      out.jacobian.row(n_g + i) += tau(n_g + i) * sg.row(i);
    }
  }
  return out;
}

}  // namespace cobalt
