#include "cobalt/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "cobalt/rng.hpp"
#include "cobalt/saa.hpp"

namespace cobalt {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat selector(int n_x, const std::vector<int>& picks) {
  Mat a = Mat::Zero(static_cast<int>(picks.size()), n_x);
  for (int r = 0; r < static_cast<int>(picks.size()); ++r) {
    a(r, picks[r]) = 1.0;
  }
  return a;
}

Vec constant_bounds(int n, double v) { return Vec::Constant(n, v); }

GreyBoxProblem make_goldstein_price(bool verbatim) {
  GreyBoxProblem p;
  p.name = "goldstein-price";
  p.dim_x = 2;
  p.dim_y = 2;
  p.dim_z = 2;
  p.num_g = 0;
  p.selection = selector(2, {0, 1});
  p.lower = constant_bounds(2, -2.0);
  p.upper = constant_bounds(2, 2.0);
  p.objective = [](const Vec& x, const Vec& y) {
    double a = x(0) + x(1) + 1.0;
    double b = 19.0 - 14.0 * x(0) + 3.0 * x(0) * x(0) + y(0);
    double c = 18.0 - 32.0 * x(0) + 12.0 * x(0) * x(0) + 48.0 * x(1) -
               36.0 * x(0) * x(1) + 27.0 * x(1) * x(1);
    return (1.0 + a * a * b) * (30.0 + y(1) * c);
  };
  p.objective_grad = [](const Vec& x, const Vec& y, Vec& gx, Vec& gy) {
    double a = x(0) + x(1) + 1.0;
    double b = 19.0 - 14.0 * x(0) + 3.0 * x(0) * x(0) + y(0);
    double c = 18.0 - 32.0 * x(0) + 12.0 * x(0) * x(0) + 48.0 * x(1) -
               36.0 * x(0) * x(1) + 27.0 * x(1) * x(1);
    double P = 1.0 + a * a * b;
    double Q = 30.0 + y(1) * c;
    double dP_dx1 = 2.0 * a * b + a * a * (-14.0 + 6.0 * x(0));
    double dP_dx2 = 2.0 * a * b;
    double dQ_dx1 = y(1) * (-32.0 + 24.0 * x(0) - 36.0 * x(1));
    double dQ_dx2 = y(1) * (48.0 - 36.0 * x(0) + 54.0 * x(1));
    gx.resize(2);
    gx(0) = Q * dP_dx1 + P * dQ_dx1;
    gx(1) = Q * dP_dx2 + P * dQ_dx2;
    gy.resize(2);
    gy(0) = Q * a * a;
    gy(1) = P * c;
  };
  if (verbatim) {
    p.black_box = [](const Vec& z) {
      Vec y(2);
      y(0) = -14.0 * z(1) + 6.0 * z(0) * z(1) + 3.0 * z(1) * z(1);
      y(1) = 2.0 * z(0) * z(0) - 3.0 * z(1) * z(1);
      return y;
    };
  } else {
    // canonical Goldstein-Price factor: d2 = (2 z1 - 3 z2)^2, which makes
    // the stated optimum 3 at (0, -1) hold
    p.black_box = [](const Vec& z) {
      Vec y(2);
      y(0) = -14.0 * z(1) + 6.0 * z(0) * z(1) + 3.0 * z(1) * z(1);
      double t = 2.0 * z(0) - 3.0 * z(1);
      y(1) = t * t;
      return y;
    };
  }
  return p;
}

GreyBoxProblem make_rastrigin() {
  GreyBoxProblem p;
  p.name = "rastrigin";
  p.dim_x = 3;
  p.dim_y = 1;
  p.dim_z = 1;
  p.num_g = 0;
  p.selection = selector(3, {2});
  p.lower = constant_bounds(3, -5.12);
  p.upper = constant_bounds(3, 5.12);
  const double two_pi = 2.0 * std::numbers::pi;
  p.objective = [two_pi](const Vec& x, const Vec& y) {
    return 30.0 + x(0) * x(0) - 10.0 * std::cos(two_pi * x(0)) +
           x(1) * x(1) - 10.0 * std::cos(two_pi * x(1)) + y(0);
  };
  p.objective_grad = [two_pi](const Vec& x, const Vec& y, Vec& gx, Vec& gy) {
    (void)y;
    gx.resize(3);
    gx(0) = 2.0 * x(0) + 10.0 * two_pi * std::sin(two_pi * x(0));
    gx(1) = 2.0 * x(1) + 10.0 * two_pi * std::sin(two_pi * x(1));
    gx(2) = 0.0;
    gy.resize(1);
    gy(0) = 1.0;
  };
  p.black_box = [two_pi](const Vec& z) {
    Vec y(1);
    y(0) = z(0) * z(0) - 10.0 * std::cos(two_pi * z(0));
    return y;
  };
  return p;
}

GreyBoxProblem make_rosenbrock(bool verbatim) {
  GreyBoxProblem p;
  p.name = "rosenbrock";
  p.dim_x = 6;
  p.dim_y = 4;
  p.dim_z = 4;
  p.num_g = 0;
  p.selection = selector(6, {0, 1, 2, 3});
  p.lower = constant_bounds(6, -2.0);
  p.upper = constant_bounds(6, 2.0);
  if (verbatim) {
    p.objective = [](const Vec& x, const Vec& y) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) {
        v += 100.0 * y(i) * y(i) + (1.0 - x(i)) * (1.0 - x(i));
      }
      v += 100.0 * (x(4) - x(3) * x(3)) + y(3);
      v += 100.0 * (x(5) - x(4) * x(4)) + (1.0 - x(4)) * (1.0 - x(4));
      return v;
    };
    p.objective_grad = [](const Vec& x, const Vec& y, Vec& gx, Vec& gy) {
      gx = Vec::Zero(6);
      gy.resize(4);
      for (int i = 0; i < 3; ++i) {
        gx(i) = -2.0 * (1.0 - x(i));
        gy(i) = 200.0 * y(i);
      }
      gy(3) = 1.0;
      gx(3) = -200.0 * x(3);
      gx(4) = 100.0 - 200.0 * x(4) - 2.0 * (1.0 - x(4));
      gx(5) = 100.0;
    };
    p.black_box = [](const Vec& z) {
      Vec y(4);
      for (int i = 0; i < 3; ++i) y(i) = z(i + 1) * z(i + 1) - z(i) * z(i);
      y(3) = (1.0 - z(3)) * (1.0 - z(3));
      return y;
    };
  } else {
    // canonical six-dimensional Rosenbrock composite, minimum 0 at the
    // all-ones point
    p.objective = [](const Vec& x, const Vec& y) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) {
        v += 100.0 * y(i) * y(i) + (1.0 - x(i)) * (1.0 - x(i));
      }
      double t4 = x(4) - x(3) * x(3);
      double t5 = x(5) - x(4) * x(4);
      v += 100.0 * t4 * t4 + y(3);
      v += 100.0 * t5 * t5 + (1.0 - x(4)) * (1.0 - x(4));
      return v;
    };
    p.objective_grad = [](const Vec& x, const Vec& y, Vec& gx, Vec& gy) {
      gx = Vec::Zero(6);
      gy.resize(4);
      for (int i = 0; i < 3; ++i) {
        gx(i) = -2.0 * (1.0 - x(i));
        gy(i) = 200.0 * y(i);
      }
      gy(3) = 1.0;
      double t4 = x(4) - x(3) * x(3);
      double t5 = x(5) - x(4) * x(4);
      gx(3) = -400.0 * x(3) * t4;
      gx(4) = 200.0 * t4 - 400.0 * x(4) * t5 - 2.0 * (1.0 - x(4));
      gx(5) = 200.0 * t5;
    };
    p.black_box = [](const Vec& z) {
      Vec y(4);
      for (int i = 0; i < 3; ++i) y(i) = z(i + 1) - z(i) * z(i);
      y(3) = (1.0 - z(3)) * (1.0 - z(3));
      return y;
    };
  }
  return p;
}

GreyBoxProblem make_toy_hydrology() {
  GreyBoxProblem p;
  p.name = "toy-hydrology";
  p.dim_x = 2;
  p.dim_y = 1;
  p.dim_z = 1;
  p.num_g = 2;
  p.selection = selector(2, {0});
  p.lower = constant_bounds(2, 0.0);
  p.upper = constant_bounds(2, 1.0);
  p.constraint_uses_y = {true, false};
  p.objective = [](const Vec& x, const Vec&) { return x(0) + x(1); };
  p.objective_grad = [](const Vec&, const Vec&, Vec& gx, Vec& gy) {
    gx.resize(2);
    gx << 1.0, 1.0;
    gy = Vec::Zero(1);
  };
  const double four_pi = 4.0 * std::numbers::pi;
  p.constraints = [four_pi](const Vec& x, const Vec& y) {
    Vec g(2);
    g(0) = 1.5 - x(0) - 2.0 * x(1) - 0.5 * std::sin(-four_pi * x(1) + y(0));
    g(1) = x(0) * x(0) + x(1) * x(1) - 1.5;
    return g;
  };
  p.constraints_grad = [four_pi](const Vec& x, const Vec& y, Mat& jx,
                                 Mat& jy) {
    double c = std::cos(-four_pi * x(1) + y(0));
    jx = Mat::Zero(2, 2);
    jx(0, 0) = -1.0;
    jx(0, 1) = -2.0 + 0.5 * four_pi * c;
    jx(1, 0) = 2.0 * x(0);
    jx(1, 1) = 2.0 * x(1);
    jy = Mat::Zero(2, 1);
    jy(0, 0) = -0.5 * c;
  };
  p.black_box = [](const Vec& z) {
    Vec y(1);
    y(0) = 2.0 * std::numbers::pi * z(0) * z(0);
    return y;
  };
  return p;
}

GreyBoxProblem make_rosen_suzuki() {
  GreyBoxProblem p;
  p.name = "rosen-suzuki";
  p.dim_x = 4;
  p.dim_y = 2;
  p.dim_z = 2;
  p.num_g = 3;
  p.selection = selector(4, {2, 3});
  p.lower = constant_bounds(4, -2.0);
  p.upper = constant_bounds(4, 2.0);
  p.constraint_uses_y = {false, true, false};
  p.objective = [](const Vec& x, const Vec& y) {
    return x(0) * x(0) + x(1) * x(1) + x(3) * x(3) - 5.0 * x(0) -
           5.0 * x(1) + y(0);
  };
  p.objective_grad = [](const Vec& x, const Vec&, Vec& gx, Vec& gy) {
    gx.resize(4);
    gx << 2.0 * x(0) - 5.0, 2.0 * x(1) - 5.0, 0.0, 2.0 * x(3);
    gy.resize(2);
    gy << 1.0, 0.0;
  };
  p.constraints = [](const Vec& x, const Vec& y) {
    Vec g(3);
    g(0) = -(8.0 - x(0) * x(0) - x(1) * x(1) - x(2) * x(2) - x(3) * x(3) -
             x(0) + x(1) - x(2) + x(3));
    g(1) = -(10.0 - x(0) * x(0) - 2.0 * x(1) * x(1) - y(1) + x(0) + x(3));
    g(2) = -(5.0 - 2.0 * x(0) * x(0) - x(1) * x(1) - x(2) * x(2) -
             2.0 * x(0) + x(1) + x(3));
    return g;
  };
  p.constraints_grad = [](const Vec& x, const Vec&, Mat& jx, Mat& jy) {
    jx = Mat::Zero(3, 4);
    jx.row(0) << 2.0 * x(0) + 1.0, 2.0 * x(1) - 1.0, 2.0 * x(2) + 1.0,
        2.0 * x(3) - 1.0;
    jx.row(1) << 2.0 * x(0) - 1.0, 4.0 * x(1), 0.0, -1.0;
    jx.row(2) << 4.0 * x(0) + 2.0, 2.0 * x(1) - 1.0, 2.0 * x(2), -1.0;
    jy = Mat::Zero(3, 2);
    jy(1, 1) = 1.0;
  };
  p.black_box = [](const Vec& z) {
    Vec y(2);
    y(0) = 2.0 * z(0) * z(0) - 21.0 * z(0) + 7.0 * z(1);
    y(1) = z(0) * z(0) + 2.0 * z(1) * z(1);
    return y;
  };
  return p;
}

GreyBoxProblem make_colville() {
  GreyBoxProblem p;
  p.name = "colville";
  p.dim_x = 5;
  p.dim_y = 4;
  p.dim_z = 4;
  p.num_g = 6;
  p.selection = selector(5, {0, 1, 2, 4});
  p.lower.resize(5);
  p.upper.resize(5);
  p.lower << 78.0, 33.0, 27.0, 27.0, 27.0;
  p.upper << 102.0, 45.0, 45.0, 45.0, 45.0;
  p.constraint_uses_y = {true, false, true, false, true, false};
  p.objective = [](const Vec& x, const Vec& y) {
    return 5.3578 * x(2) * x(2) + y(0);
  };
  p.objective_grad = [](const Vec& x, const Vec&, Vec& gx, Vec& gy) {
    gx = Vec::Zero(5);
    gx(2) = 2.0 * 5.3578 * x(2);
    gy = Vec::Zero(4);
    gy(0) = 1.0;
  };
  p.constraints = [](const Vec& x, const Vec& y) {
    Vec g(6);
    g(0) = y(1) - 0.0000734 * x(0) * x(3) - 1.0;
    g(1) = 0.000853007 * x(1) * x(4) + 0.00009395 * x(0) * x(3) -
           0.00033085 * x(2) * x(4) - 1.0;
    g(2) = y(3) - 0.30586 * x(2) * x(2) / (x(1) * x(4)) - 1.0;
    g(3) = 0.00024186 * x(1) * x(4) + 0.00010159 * x(0) * x(1) +
           0.00007379 * x(2) * x(2) - 1.0;
    g(4) = y(2) - 0.40584 * x(3) / x(4) - 1.0;
    g(5) = 0.00029955 * x(2) * x(4) + 0.00007992 * x(0) * x(2) +
           0.00012157 * x(2) * x(3) - 1.0;
    return g;
  };
  p.constraints_grad = [](const Vec& x, const Vec&, Mat& jx, Mat& jy) {
    jx = Mat::Zero(6, 5);
    jx.row(0) << -0.0000734 * x(3), 0.0, 0.0, -0.0000734 * x(0), 0.0;
    jx.row(1) << 0.00009395 * x(3), 0.000853007 * x(4), -0.00033085 * x(4),
        0.00009395 * x(0), 0.000853007 * x(1) - 0.00033085 * x(2);
    double q = 0.30586 * x(2) * x(2);
    jx.row(2) << 0.0, q / (x(1) * x(1) * x(4)),
        -2.0 * 0.30586 * x(2) / (x(1) * x(4)), 0.0,
        q / (x(1) * x(4) * x(4));
    jx.row(3) << 0.00010159 * x(1), 0.00024186 * x(4) + 0.00010159 * x(0),
        2.0 * 0.00007379 * x(2), 0.0, 0.00024186 * x(1);
    jx.row(4) << 0.0, 0.0, 0.0, -0.40584 / x(4),
        0.40584 * x(3) / (x(4) * x(4));
    jx.row(5) << 0.00007992 * x(2), 0.0,
        0.00029955 * x(4) + 0.00007992 * x(0) + 0.00012157 * x(3), 0.00012157 * x(2),
        0.00029955 * x(2);
    jy = Mat::Zero(6, 4);
    jy(0, 1) = 1.0;
    jy(2, 3) = 1.0;
    jy(4, 2) = 1.0;
  };
  p.black_box = [](const Vec& z) {
    Vec y(4);
    y(0) = 0.8357 * z(0) * z(3) + 37.2392 * z(0);
    y(1) = 0.00002584 * z(2) * z(3) - 0.00006663 * z(1) * z(3);
    y(2) = 2275.1327 / (z(2) * z(3)) - 0.2668 * z(0) / z(3);
    y(3) = 1330.3294 / (z(1) * z(3)) - 0.42 * z(0) / z(3);
    return y;
  };
  return p;
}

std::map<std::string, ProblemSpec> build_registry() {
  std::map<std::string, ProblemSpec> reg;
  auto add = [&](const std::string& name, double value,
                 std::initializer_list<double> minimizer, bool discrepancy) {
    ProblemSpec spec;
    spec.name = name;
    spec.stated_value = value;
    spec.stated_minimizer =
        Eigen::Map<const Vec>(std::data(minimizer),
                              static_cast<int>(minimizer.size()));
    spec.printed_form_discrepancy = discrepancy;
    reg[name] = spec;
  };
  add("goldstein-price", 3.0, {0.0, -1.0}, true);
  add("rastrigin", 0.0, {0.0, 0.0, 0.0}, false);
  add("rosenbrock", 0.0, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, true);
  add("toy-hydrology", 0.5998, {0.1951, 0.4047}, false);
  add("rosen-suzuki", -44.0, {0.0, 1.0, 2.0, -1.0}, false);
  add("colville", 10122.7, {78.0, 33.0, 29.998, 45.0, 36.7673}, false);
  return reg;
}

const std::map<std::string, ProblemSpec>& registry() {
  static const std::map<std::string, ProblemSpec> reg = build_registry();
  return reg;
}

}  // namespace

std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const auto& [name, spec] : registry()) names.push_back(name);
  return names;
}

const ProblemSpec& problem_spec(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) {
    throw std::invalid_argument("unknown problem: " + name);
  }
  return it->second;
}

GreyBoxProblem make_problem(const std::string& name, bool verbatim) {
  problem_spec(name);  // validates the name
  GreyBoxProblem p;
  if (name == "goldstein-price") p = make_goldstein_price(verbatim);
  else if (name == "rastrigin") p = make_rastrigin();
  else if (name == "rosenbrock") p = make_rosenbrock(verbatim);
  else if (name == "toy-hydrology") p = make_toy_hydrology();
  else if (name == "rosen-suzuki") p = make_rosen_suzuki();
  else if (name == "colville") p = make_colville();
  p.validate();
  return p;
}

namespace {

constexpr int kOracleVersion = 4;
constexpr double kOracleResidualTol = 3e-8;

std::string cache_path() {
  if (const char* env = std::getenv("GREYBOX_BO_CACHE")) return env;
  return "oracle_cache.json";
}

// exact composite objective/constraints (oracle only), finite-difference
// gradients
Optimum solve_oracle(const std::string& name) {
  GreyBoxProblem p = make_problem(name);
  auto ell = [&p](const Vec& x) {
    return p.objective(x, p.black_box(p.select_inputs(x)));
  };
  auto cons = [&p](const Vec& x) -> Vec {
    if (p.num_g == 0) return Vec(0);
    return p.constraints(x, p.black_box(p.select_inputs(x)));
  };

  SplitMix64 rng(0xD15C0ULL);
  Eigen::MatrixXd sweep = latin_hypercube(p.lower, p.upper, 10000, rng);
  // rank sweep points by objective with a large penalty on violation
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(sweep.rows());
  for (int i = 0; i < sweep.rows(); ++i) {
    Vec x = sweep.row(i).transpose();
    double score = ell(x);
    Vec c = cons(x);
    if (c.size() > 0) {
      score += 1e6 * (c.array().max(0.0)).sum();
    }
    ranked.push_back({score, i});
  }
  std::sort(ranked.begin(), ranked.end());

  SAAProblem sub;
  sub.lower = p.lower;
  sub.upper = p.upper;
  sub.num_residuals = p.num_g;
  sub.tol = kOracleResidualTol;
  // the oracle runs offline and is cached; allow a generous solver budget
  sub.max_outer = 40;
  sub.max_inner = 200;
  auto fd_grad = [](auto&& fn, const Vec& x, int out_dim) -> Eigen::MatrixXd {
    Eigen::MatrixXd jac(out_dim, x.size());
    for (int k = 0; k < x.size(); ++k) {
      double h = 1e-7 * (1.0 + std::abs(x(k)));
      Vec xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      Vec fp = fn(xp), fm = fn(xm);
      jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
  };
  sub.objective = [&](const Vec& x) {
    AcquisitionValue v;
    v.value = -ell(x);  // solver maximizes
    auto scalar = [&](const Vec& xq) {
      Vec out(1);
      out(0) = ell(xq);
      return out;
    };
    v.gradient = -fd_grad(scalar, x, 1).row(0).transpose();
    return v;
  };
  sub.residuals = [&](const Vec& x, bool grads) {
    ResidualSet r;
    r.values = cons(x);
    if (grads && p.num_g > 0) r.jacobian = fd_grad(cons, x, p.num_g);
    else if (grads) r.jacobian.resize(0, p.dim_x);
    return r;
  };

  std::vector<Vec> starts;
  starts.push_back(problem_spec(name).stated_minimizer);
  for (int i = 0; i < std::min<int>(20, static_cast<int>(ranked.size()));
       ++i) {
    starts.push_back(sweep.row(ranked[i].second).transpose());
  }
  SolveReport report = solve_multistart(sub, 8, 0xD15C0ULL, starts);
  if (report.restoration_used) {
    throw std::runtime_error("oracle found no feasible point for " + name);
  }
  // second pass well inside the feasibility tolerance, warm-started from
  // the relaxed solutions, to obtain a strictly tol-feasible minimizer
  SAAProblem tight = sub;
  tight.tol = 1e-9;
  std::vector<Vec> tight_starts = starts;
  for (const auto& s : report.starts) tight_starts.push_back(s.x);
  SolveReport tight_report =
      solve_multistart(tight, 8, 0xD15C0ULL, tight_starts);

  // The reported minimizer must satisfy the tight feasibility tolerance;
  // the reported value additionally takes the minimum over the slightly
  // relaxed region, so incumbents that sit on the tolerance boundary can
  // never undercut the regret reference.
  Optimum best;
  best.regret_reference = std::numeric_limits<double>::infinity();
  double feasible_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& x) {
    Vec xc = x.cwiseMax(p.lower).cwiseMin(p.upper);
    double viol = 0.0;
    Vec c = cons(xc);
    if (c.size() > 0) viol = c.maxCoeff();
    if (viol > kOracleResidualTol) return;
    double v = ell(xc);
    best.regret_reference = std::min(best.regret_reference, v);
    if (viol <= kFeasibilityTol && v < feasible_value) {
      feasible_value = v;
      best.minimizer = xc;
    }
  };
  for (const auto& s : report.starts) consider(s.x);
  for (const auto& s : tight_report.starts) consider(s.x);
  consider(problem_spec(name).stated_minimizer);
  if (!std::isfinite(best.regret_reference) ||
      !std::isfinite(feasible_value)) {
    throw std::runtime_error("oracle failed for " + name);
  }
  best.value = feasible_value;
  return best;
}

}  // namespace

Optimum reference_optimum(const std::string& name) {
  static std::mutex mutex;
  static std::map<std::string, Optimum> memory;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = memory.find(name); it != memory.end()) return it->second;

  const std::string key =
      name + "#v" + std::to_string(kOracleVersion) + "#lhs10000";
  nlohmann::json cache;
  {
    std::ifstream in(cache_path());
    if (in) {
      try {
        in >> cache;
      } catch (...) {
        cache = nlohmann::json::object();
      }
    }
  }
  if (cache.contains(key)) {
    Optimum opt;
    opt.value = cache[key]["value"].get<double>();
    opt.regret_reference = cache[key]["regret_reference"].get<double>();
    auto mins = cache[key]["minimizer"].get<std::vector<double>>();
    opt.minimizer = Eigen::Map<const Vec>(mins.data(),
                                          static_cast<int>(mins.size()));
    memory[name] = opt;
    return opt;
  }

  Optimum opt = solve_oracle(name);
  cache[key] = {{"value", opt.value},
                {"regret_reference", opt.regret_reference},
                {"minimizer", std::vector<double>(
                                  opt.minimizer.data(),
                                  opt.minimizer.data() + opt.minimizer.size())}};
  std::ofstream out(cache_path());
  if (out) out << cache.dump(2) << "\n";
  memory[name] = opt;
  return opt;
}

}  // namespace cobalt
