#include "cobalt/saa.hpp"

#include <algorithm>
#include <cmath>

#include "cobalt/rng.hpp"

namespace cobalt {

SAAProblem assemble_saa(const GreyBoxProblem& problem,
                        const std::vector<GPModel>& models,
                        const AcquisitionContext& ctx,
                        const Eigen::VectorXd& tau_ineq,
                        const Eigen::VectorXd& tau_eq) {
  SAAProblem saa;
  saa.lower = problem.lower;
  saa.upper = problem.upper;
  saa.num_residuals = problem.num_g + problem.num_h;
  saa.objective = [&problem, &models, ctx](const Eigen::VectorXd& x) {
    (void)problem;
    (void)models;
    return mwb2_cf(ctx, x);
  };
  saa.residuals = [&problem, &models, tau_ineq, tau_eq](
                      const Eigen::VectorXd& x, bool with_grads) {
    return all_residuals(problem, models, x, tau_ineq, tau_eq, with_grads);
  };
  return saa;
}

InnerResult minimize_box(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>&
        value_and_grad,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, int max_iters, double tol) {
  auto project = [&](const Eigen::VectorXd& v) {
    return v.cwiseMax(lower).cwiseMin(upper).eval();
  };
  InnerResult res;
  res.x = project(x0);
  Eigen::VectorXd grad(x0.size());
  res.value = value_and_grad(res.x, grad);
  Eigen::VectorXd x_prev = res.x, grad_prev = grad;
  double step = 1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    res.iterations = iter;
    Eigen::VectorXd pg = res.x - project(res.x - grad);
    res.projected_grad_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_grad_norm < tol) break;
    if (iter > 0) {
      Eigen::VectorXd s = res.x - x_prev;
      Eigen::VectorXd y = grad - grad_prev;
      double sy = s.dot(y);
      step = sy > 1e-30 ? s.squaredNorm() / sy : 1.0;
      step = std::clamp(step, 1e-12, 1e8);
    }
    x_prev = res.x;
    grad_prev = grad;
    bool moved = false;
    double t = step;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd cand = project(res.x - t * grad);
      Eigen::VectorXd d = cand - res.x;
      if (d.lpNorm<Eigen::Infinity>() < 1e-15) break;
      Eigen::VectorXd cand_grad(x0.size());
      double cand_value = value_and_grad(cand, cand_grad);
      if (cand_value <= res.value + 1e-4 * grad.dot(d)) {
        res.x = cand;
        res.value = cand_value;
        grad = cand_grad;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  Eigen::VectorXd pg = res.x - project(res.x - grad);
  res.projected_grad_norm = pg.lpNorm<Eigen::Infinity>();
  return res;
}

namespace {

// one augmented-Lagrangian solve from a single start; minimizes -objective
StartOutcome solve_single(const SAAProblem& saa, const Eigen::VectorXd& x0) {
  const int n_r = saa.num_residuals;
  StartOutcome out;
  if (n_r == 0) {
    auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      AcquisitionValue a = saa.objective(x);
      grad = -a.gradient;
      return -a.value;
    };
    InnerResult inner =
        minimize_box(fg, x0, saa.lower, saa.upper,
                     saa.max_outer * saa.max_inner, 1e-7);
    out.x = inner.x;
    out.objective = -inner.value;
    out.max_residual = 0.0;
    out.iterations = inner.iterations;
    out.converged = inner.projected_grad_norm < 1e-5;
    return out;
  }

  Eigen::VectorXd mult = Eigen::VectorXd::Zero(n_r);
  double rho = 10.0;
  Eigen::VectorXd x = x0;
  double prev_violation = std::numeric_limits<double>::infinity();
  int total_inner = 0;
  bool kkt = false;
  for (int outer = 0; outer < saa.max_outer; ++outer) {
    auto fg = [&](const Eigen::VectorXd& xq, Eigen::VectorXd& grad) {
      AcquisitionValue a = saa.objective(xq);
      ResidualSet r = saa.residuals(xq, true);
      double value = -a.value;
      grad = -a.gradient;
      for (int i = 0; i < n_r; ++i) {
        double t = mult(i) + rho * r.values(i);
        if (t > 0.0) {
          value += (t * t - mult(i) * mult(i)) / (2.0 * rho);
          grad += t * r.jacobian.row(i).transpose();
        } else {
          value -= mult(i) * mult(i) / (2.0 * rho);
        }
      }
      return value;
    };
    InnerResult inner = minimize_box(fg, x, saa.lower, saa.upper, saa.max_inner, 1e-7);
    x = inner.x;
    total_inner += inner.iterations;
    ResidualSet r = saa.residuals(x, false);
    double violation = std::max(0.0, r.values.maxCoeff());
    for (int i = 0; i < n_r; ++i) {
      mult(i) = std::max(0.0, mult(i) + rho * r.values(i));
    }
    // complementary slackness: a stale positive multiplier on an inactive
    // constraint makes the Lagrangian stationary at non-optimal interior
    // points, so feasibility + stationarity alone is not enough to stop
    double comp = 0.0;
    for (int i = 0; i < n_r; ++i) {
      comp = std::max(comp, std::abs(mult(i) * r.values(i)));
    }
    if (violation <= saa.tol && inner.projected_grad_norm < 1e-5 &&
        comp <= std::max(saa.tol, 1e-8)) {
      kkt = true;
      break;
    }
    if (violation > 0.25 * prev_violation) {
      rho = std::min(rho * 10.0, 1e8);
    }
    prev_violation = violation;
  }
  out.x = x;
  out.objective = saa.objective(x).value;
  ResidualSet r = saa.residuals(x, false);
  out.max_residual = r.values.size() > 0 ? r.values.maxCoeff() : 0.0;
  out.iterations = total_inner;
  out.converged = kkt;
  return out;
}

// lexicographic comparison used for deterministic tie-breaking
bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

}  // namespace

SolveReport solve_multistart(const SAAProblem& saa, int n_starts,
                             std::uint64_t seed,
                             const std::vector<Eigen::VectorXd>& extra_starts) {
  if (n_starts < 1) {
    throw std::invalid_argument("solve_multistart: n_starts must be >= 1");
  }
  SplitMix64 rng(seed ^ 0x5AA5AA5AULL);
  Eigen::MatrixXd design =
      shifted_halton(saa.lower, saa.upper, n_starts, rng);
  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < design.rows(); ++i) {
    starts.push_back(design.row(i).transpose());
  }
  for (const auto& x : extra_starts) starts.push_back(x);

  SolveReport report;
  for (const auto& x0 : starts) {
    report.starts.push_back(solve_single(saa, x0));
  }

  const StartOutcome* best = nullptr;
  for (const auto& s : report.starts) {
    if (s.max_residual > saa.tol) continue;
    if (best == nullptr || s.objective > best->objective ||
        (s.objective == best->objective &&
         (s.max_residual < best->max_residual ||
          (s.max_residual == best->max_residual && lex_less(s.x, best->x))))) {
      best = &s;
    }
  }
  if (best != nullptr) {
    report.best = best->x;
    report.best_objective = best->objective;
    report.best_max_residual = best->max_residual;
    return report;
  }

  // feasibility restoration: no start satisfied the residuals, so minimize
  // the squared hinge of the residual vector and return its best minimizer
  report.restoration_used = true;
  auto restoration = [&](const Eigen::VectorXd& xq, Eigen::VectorXd& grad) {
    ResidualSet r = saa.residuals(xq, true);
    double value = 0.0;
    grad.setZero(xq.size());
    for (int i = 0; i < r.values.size(); ++i) {
      double v = std::max(0.0, r.values(i));
      value += 0.5 * v * v;
      if (v > 0.0) grad += v * r.jacobian.row(i).transpose();
    }
    return value;
  };
  const Eigen::VectorXd* best_x = nullptr;
  Eigen::VectorXd rest_best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    InnerResult inner =
        minimize_box(restoration, x0, saa.lower, saa.upper,
                     saa.max_outer * saa.max_inner, 1e-9);
    ResidualSet r = saa.residuals(inner.x, false);
    double violation = r.values.size() > 0 ? r.values.maxCoeff() : 0.0;
    if (violation < best_violation ||
        (violation == best_violation &&
         (best_x == nullptr || lex_less(inner.x, rest_best)))) {
      best_violation = violation;
      rest_best = inner.x;
      best_x = &rest_best;
    }
  }
  report.best = rest_best;
  report.best_objective = saa.objective(rest_best).value;
  report.best_max_residual = best_violation;
  return report;
}

double update_incumbent(const ObservationSet& observations) {
  return observations.incumbent();
}

}  // namespace cobalt
