#include <cmath>

#include "doctest.h"

#include "cobalt/feasibility.hpp"
#include "cobalt/rng.hpp"
#include "cobalt/testbed.hpp"

using namespace cobalt;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

constexpr double kSdSmoothing = 1e-10;

Vec make_vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vec>(std::data(v), static_cast<int>(v.size()));
}

double smooth_sd(double var) {
  return std::sqrt(var + kSdSmoothing * kSdSmoothing) - kSdSmoothing;
}

std::vector<GPModel> fixed_models(const GreyBoxProblem& p, const Mat& Z,
                                  const std::vector<Vec>& targets) {
  KernelSpec spec;
  spec.kind = KernelKind::SqExp;
  spec.signal_var = 1.0;
  spec.lengthscales = Vec::Constant(Z.cols(), 0.4);
  std::vector<GPModel> models;
  for (const auto& t : targets) {
    models.push_back(fit_gp_fixed(Z, t, spec, 1e-8,
                                  std::optional<Vec>(p.selection * p.lower),
                                  std::optional<Vec>(p.selection * p.upper)));
  }
  return models;
}

// two-output problem with one linear mixed constraint and one y-free one
GreyBoxProblem linear_problem() {
  GreyBoxProblem p;
  p.name = "linear-mixed";
  p.dim_x = 2;
  p.dim_y = 2;
  p.dim_z = 2;
  p.num_g = 2;
  p.selection = Mat::Identity(2, 2);
  p.lower = make_vec({0.0, 0.0});
  p.upper = make_vec({1.0, 1.0});
  p.constraint_uses_y = {true, false};
  p.objective = [](const Vec& x, const Vec&) { return x.sum(); };
  p.objective_grad = [](const Vec&, const Vec&, Vec& gx, Vec& gy) {
    gx = Vec::Ones(2);
    gy = Vec::Zero(2);
  };
  p.constraints = [](const Vec& x, const Vec& y) {
    Vec g(2);
    g(0) = 2.0 * y(0) - 0.5 * y(1) + 3.0 * x(0) - 1.0;
    g(1) = x(0) + x(1) - 1.2;
    return g;
  };
  p.constraints_grad = [](const Vec&, const Vec&, Mat& jx, Mat& jy) {
    jx = Mat::Zero(2, 2);
    jx(0, 0) = 3.0;
    jx(1, 0) = 1.0;
    jx(1, 1) = 1.0;
    jy = Mat::Zero(2, 2);
    jy(0, 0) = 2.0;
    jy(0, 1) = -0.5;
  };
  p.black_box = [](const Vec& z) {
    Vec y(2);
    y(0) = z(0) * z(0);
    y(1) = std::sin(3.0 * z(1));
    return y;
  };
  return p;
}

}  // namespace

TEST_CASE("moments of a linear constraint match the exact propagation") {
  GreyBoxProblem p = linear_problem();
  SplitMix64 rng(17);
  Mat Z(7, 2);
  std::vector<Vec> targets(2, Vec(7));
  for (int i = 0; i < 7; ++i) {
    Z(i, 0) = rng.next_uniform();
    Z(i, 1) = rng.next_uniform();
    Vec y = p.black_box(Z.row(i).transpose());
    targets[0](i) = y(0);
    targets[1](i) = y(1);
  }
  auto models = fixed_models(p, Z, targets);

  for (int rep = 0; rep < 100; ++rep) {
    Vec x = make_vec({rng.next_uniform(), rng.next_uniform()});
    MOGPosterior post = mogp_posterior(models, x);
    ConstraintMoments m0 = constraint_moments(p, models, x, 0, false, false);
    double want_mean = 2.0 * post.mean(0) - 0.5 * post.mean(1) +
                       3.0 * x(0) - 1.0;
    double want_var = 4.0 * post.var(0) + 0.25 * post.var(1);
    CHECK(m0.mean == doctest::Approx(want_mean).epsilon(1e-12));
    CHECK(m0.sd == doctest::Approx(smooth_sd(want_var))
                       .epsilon(1e-12)
                       .scale(1.0));

    // constraint independent of y keeps its deterministic value, zero spread
    ConstraintMoments m1 = constraint_moments(p, models, x, 1, false, false);
    CHECK(m1.mean == doctest::Approx(x(0) + x(1) - 1.2).epsilon(1e-13));
    CHECK(m1.sd == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("moments of a quadratic constraint use the first-order expansion") {
  // g(x, y) = y_1^2; posterior mean 2, variance known: linearization gives
  // mean = mu^2 = 4 and sd = |2 mu| sigma = 4 sigma
  GreyBoxProblem p;
  p.dim_x = 1;
  p.dim_y = 1;
  p.dim_z = 1;
  p.num_g = 1;
  p.selection = Mat::Identity(1, 1);
  p.lower = make_vec({0.0});
  p.upper = make_vec({1.0});
  p.constraint_uses_y = {true};
  p.objective = [](const Vec&, const Vec&) { return 0.0; };
  p.objective_grad = [](const Vec&, const Vec&, Vec& gx, Vec& gy) {
    gx = Vec::Zero(1);
    gy = Vec::Zero(1);
  };
  p.constraints = [](const Vec&, const Vec& y) {
    Vec g(1);
    g(0) = y(0) * y(0);
    return g;
  };
  p.constraints_grad = [](const Vec&, const Vec& y, Mat& jx, Mat& jy) {
    jx = Mat::Zero(1, 1);
    jy = Mat::Zero(1, 1);
    jy(0, 0) = 2.0 * y(0);
  };
  p.black_box = [](const Vec& z) { return z; };

  // single observation far from the query so the posterior keeps spread
  Mat Z(1, 1);
  Z << 0.0;
  Vec T(1);
  T << 2.0;  // cannot standardize one point to nonzero sd; model keeps scale
  KernelSpec spec;
  spec.kind = KernelKind::SqExp;
  spec.signal_var = 1.0;
  spec.lengthscales = make_vec({0.2});
  std::vector<GPModel> models{fit_gp_fixed(
      Z, T, spec, 1e-8, std::optional<Vec>(make_vec({0.0})),
      std::optional<Vec>(make_vec({1.0})))};

  Vec x = make_vec({0.15});
  MOGPosterior post = mogp_posterior(models, x);
  ConstraintMoments m = constraint_moments(p, models, x, 0, false, false);
  double mu = post.mean(0);
  double sd = post.sd(0);
  CHECK(m.mean == doctest::Approx(mu * mu).epsilon(1e-10));
  CHECK(m.sd == doctest::Approx(smooth_sd(4.0 * mu * mu * sd * sd))
                    .epsilon(1e-8)
                    .scale(1.0));
}

TEST_CASE("trust-level schedule and violation-probability round trip") {
  TrustSchedule sched;
  sched.initial = -3.0;
  sched.horizon = 10;
  CHECK(sched.level(0, 0) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(sched.level(0, 10) == doctest::Approx(0.0).scale(1.0));
  CHECK(sched.level(0, 5) == doctest::Approx(-1.5).epsilon(1e-14));
  // linear in n
  for (int n = 0; n <= 10; ++n) {
    CHECK(sched.level(0, n) ==
          doctest::Approx(-3.0 * (1.0 - n / 10.0)).epsilon(1e-12));
  }
  TrustSchedule flat;
  flat.mode = TrustSchedule::Mode::Constant;
  flat.initial = -2.0;
  flat.horizon = 10;
  CHECK(flat.level(0, 7) == -2.0);

  // per-constraint overrides
  TrustSchedule per;
  per.initial = -3.0;
  per.horizon = 4;
  per.per_constraint_initial = {-1.0, -2.0};
  CHECK(per.level(0, 2) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(per.level(1, 2) == doctest::Approx(-1.0).epsilon(1e-12));

  // epsilon <-> tau round trips
  for (double tau : {-3.0, -1.0, 0.0}) {
    CHECK(trust_from_violation(violation_prob(tau)) ==
          doctest::Approx(tau).epsilon(1e-9).scale(1.0));
  }
  CHECK(violation_prob(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  // tau = -3 corresponds to about 99.87 % enforced feasibility
  CHECK(violation_prob(-3.0) ==
        doctest::Approx(0.99865010196837).epsilon(1e-9));
}

TEST_CASE("probabilistic residuals combine mean and spread as mu + tau sd") {
  std::vector<ConstraintMoments> ms(2);
  ms[0].mean = 0.4;
  ms[0].sd = 0.2;
  ms[1].mean = -1.0;
  ms[1].sd = 0.5;
  Vec tau = make_vec({-2.0, -1.0});
  Vec r = feasibility_residuals(ms, tau);
  CHECK(r(0) == doctest::Approx(0.4 - 0.4).epsilon(1e-14).scale(1.0));
  CHECK(r(1) == doctest::Approx(-1.5).epsilon(1e-14));

  // equalities use the two-sided form |mu| + tau sd
  Vec re = equality_residuals(ms, tau);
  CHECK(re(0) == doctest::Approx(0.4 - 0.4).epsilon(1e-14).scale(1.0));
  CHECK(re(1) == doctest::Approx(1.0 - 0.5).epsilon(1e-14));

  // positive trust levels make the two-sided set empty: reject them
  CHECK_THROWS_AS(equality_residuals(ms, make_vec({0.5, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("residual jacobians match finite differences") {
  GreyBoxProblem p = linear_problem();
  SplitMix64 rng(23);
  Mat Z(6, 2);
  std::vector<Vec> targets(2, Vec(6));
  for (int i = 0; i < 6; ++i) {
    Z(i, 0) = rng.next_uniform();
    Z(i, 1) = rng.next_uniform();
    Vec y = p.black_box(Z.row(i).transpose());
    targets[0](i) = y(0);
    targets[1](i) = y(1);
  }
  auto models = fixed_models(p, Z, targets);
  Vec tau = make_vec({-1.5, -1.5});
  Vec tau_eq(0);

  for (int rep = 0; rep < 10; ++rep) {
    Vec x = make_vec({rng.next_uniform(), rng.next_uniform()});
    ResidualSet rs = all_residuals(p, models, x, tau, tau_eq, true);
    REQUIRE(rs.values.size() == 2);
    REQUIRE(rs.jacobian.rows() == 2);
    for (int k = 0; k < 2; ++k) {
      double h = 1e-6;
      Vec xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      Vec vp = all_residuals(p, models, xp, tau, tau_eq, false).values;
      Vec vm = all_residuals(p, models, xm, tau, tau_eq, false).values;
      for (int i = 0; i < 2; ++i) {
        double fd = (vp(i) - vm(i)) / (2 * h);
        CHECK(rs.jacobian(i, k) ==
              doctest::Approx(fd).epsilon(1e-4).scale(1.0 + std::abs(fd)));
      }
    }
  }
}

TEST_CASE("more negative trust levels can only enlarge the feasible set") {
  GreyBoxProblem p = linear_problem();
  SplitMix64 rng(29);
  Mat Z(6, 2);
  std::vector<Vec> targets(2, Vec(6));
  for (int i = 0; i < 6; ++i) {
    Z(i, 0) = rng.next_uniform();
    Z(i, 1) = rng.next_uniform();
    Vec y = p.black_box(Z.row(i).transpose());
    targets[0](i) = y(0);
    targets[1](i) = y(1);
  }
  auto models = fixed_models(p, Z, targets);
  for (int rep = 0; rep < 50; ++rep) {
    Vec x = make_vec({rng.next_uniform(), rng.next_uniform()});
    Vec strict = all_residuals(p, models, x, make_vec({-3.0, -3.0}), Vec(0),
                               false)
                     .values;
    Vec loose =
        all_residuals(p, models, x, make_vec({-1.0, -1.0}), Vec(0), false)
            .values;
    Vec exact =
        all_residuals(p, models, x, make_vec({0.0, 0.0}), Vec(0), false)
            .values;
    // r = mu + tau sd is nondecreasing in tau, so tau = -3 is the loosest
    // relaxation and tau = 0 recovers the plain mean constraint
    for (int i = 0; i < 2; ++i) {
      CHECK(strict(i) <= loose(i) + 1e-14);
      CHECK(loose(i) <= exact(i) + 1e-14);
    }
  }
}
