#include "cobalt/acquisition.hpp"

#include <cmath>

#include "cobalt/rng.hpp"

namespace cobalt {

XiSample XiSample::generate(int m, int n_y, std::uint64_t seed) {
  XiSample xi;
  xi.seed = seed;
  xi.draws.resize(m, n_y);
  SplitMix64 rng(seed ^ 0x5eedf00dULL);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n_y; ++j) xi.draws(i, j) = rng.next_normal();
  }
  return xi;
}

MOGPosterior AcquisitionContext::posterior_at(const Eigen::VectorXd& x,
                                              bool with_gradients) const {
  return mogp_posterior(*models, problem->select_inputs(x), with_gradients);
}

double ei_analytic(double mean, double sd, double incumbent) {
  if (sd < 0.0) throw std::invalid_argument("ei_analytic: sd must be >= 0");
  double gap = incumbent - mean;
  if (std::isinf(incumbent)) {
    return incumbent > 0 ? incumbent : 0.0;
  }
  if (sd == 0.0) return std::max(gap, 0.0);
  double u = gap / sd;
  return std::max(0.0, gap * normal_cdf(u) + sd * normal_pdf(u));
}

double pi_analytic(double mean, double sd, double incumbent) {
  if (std::isinf(incumbent)) return incumbent > 0 ? 1.0 : 0.0;
  if (sd == 0.0) return incumbent > mean ? 1.0 : 0.0;
  return normal_cdf((incumbent - mean) / sd);
}

namespace {

struct SamplePass {
  double ei = 0.0;        // (1/M) sum [l* - l^i]^+
  double mean_obj = 0.0;  // (1/M) sum l^i
};

SamplePass sample_pass(const AcquisitionContext& ctx,
                       const Eigen::VectorXd& x) {
  const auto& problem = *ctx.problem;
  MOGPosterior post = ctx.posterior_at(x, false);
  const int m = ctx.xi.count();
  SamplePass out;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd y =
        post.mean + post.sd.cwiseProduct(ctx.xi.draws.row(i).transpose());
    double li = problem.objective(x, y);
    out.mean_obj += li;
    if (std::isfinite(ctx.incumbent)) {
      out.ei += std::max(ctx.incumbent - li, 0.0);
    } else if (ctx.incumbent < 0) {
      // incumbent = -inf: no improvement is possible
    } else {
      out.ei = std::numeric_limits<double>::infinity();
    }
  }
  out.ei /= m;
  out.mean_obj /= m;
  return out;
}

}  // namespace

double ei_cf(const AcquisitionContext& ctx, const Eigen::VectorXd& x) {
  return sample_pass(ctx, x).ei;
}

double objective_mean(const AcquisitionContext& ctx,
                      const Eigen::VectorXd& x) {
  return sample_pass(ctx, x).mean_obj;
}

namespace {

// shared value+gradient pass; hinge weight selects mWB2-CF vs plain EI-CF
AcquisitionValue gradient_pass(const AcquisitionContext& ctx,
                               const Eigen::VectorXd& x, double hinge_scale,
                               bool include_mean_term) {
  const auto& problem = *ctx.problem;
  const int n_x = problem.dim_x;
  MOGPosterior post = ctx.posterior_at(x, true);
  const int m = ctx.xi.count();
  const bool finite_incumbent = std::isfinite(ctx.incumbent);

  double ei_sum = 0.0, mean_sum = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_x);
  Eigen::VectorXd gx(n_x), gy(problem.dim_y);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd xi_i = ctx.xi.draws.row(i).transpose();
    Eigen::VectorXd y = post.mean + post.sd.cwiseProduct(xi_i);
    double li = problem.objective(x, y);
    mean_sum += li;
    problem.objective_grad(x, y, gx, gy);
    // dy/dz = mean_jac + diag(xi) sd_jac; chain z = A x
    Eigen::VectorXd gz =
        post.mean_jac.transpose() * gy +
        post.sd_jac.transpose() * gy.cwiseProduct(xi_i);
    Eigen::VectorXd gli = gx + problem.selection.transpose() * gz;
    bool improves = finite_incumbent && li < ctx.incumbent;
    if (improves) {
      ei_sum += ctx.incumbent - li;
      grad -= hinge_scale * gli;  // gamma_n term
    }
    if (include_mean_term) grad -= gli;
  }
  AcquisitionValue out;
  double ei = ei_sum / m;
  double mean_obj = mean_sum / m;
  if (include_mean_term) {
    out.value = hinge_scale * ei - mean_obj;
  } else {
    out.value = hinge_scale * ei;
  }
  out.gradient = grad / m;
  return out;
}

}  // namespace

AcquisitionValue mwb2_cf(const AcquisitionContext& ctx,
                         const Eigen::VectorXd& x) {
  return gradient_pass(ctx, x, ctx.scale, /*include_mean_term=*/true);
}

AcquisitionValue ei_cf_with_grad(const AcquisitionContext& ctx,
                                 const Eigen::VectorXd& x) {
  return gradient_pass(ctx, x, 1.0, /*include_mean_term=*/false);
}

double compute_scale(const AcquisitionContext& ctx,
                     const std::vector<Eigen::VectorXd>& start_candidates) {
  if (!std::isfinite(ctx.incumbent)) return 0.0;
  if (start_candidates.empty()) {
    throw std::invalid_argument("compute_scale: no candidates");
  }
  double best_ei = -1.0;
  Eigen::VectorXd best_x;
  for (const auto& x : start_candidates) {
    double ei = ei_cf(ctx, x);
    if (ei > best_ei) {
      best_ei = ei;
      best_x = x;
    }
  }
  if (best_ei > 0.0) {
    return ctx.beta * std::abs(objective_mean(ctx, best_x)) / best_ei;
  }
  return 1.0;
}

}  // namespace cobalt
