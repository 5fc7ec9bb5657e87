#include <cmath>
#include <limits>

#include "doctest.h"

#include "cobalt/loop.hpp"
#include "cobalt/records.hpp"
#include "cobalt/testbed.hpp"

using namespace cobalt;
using Vec = Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RunConfig small_config(Variant v, int budget, std::uint64_t seed) {
  RunConfig c;
  c.budget = budget;
  c.seed = seed;
  c.variant = v;
  return c;
}

}  // namespace

TEST_CASE("regret transform") {
  CHECK(log10_regret(11.0, 10.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(log10_regret(110.0, 10.0) == doctest::Approx(2.0).epsilon(1e-12));
  // exact hits clamp at the floor instead of diverging
  CHECK(log10_regret(10.0, 10.0) == doctest::Approx(-12.0).epsilon(1e-12));
  CHECK(log10_regret(kInf, 10.0) == kInf);
  // undercutting the reference optimum is a hard error, not silence
  CHECK_THROWS_AS(log10_regret(9.0, 10.0), OracleInconsistency);
  // within tolerance of the reference is not an undercut
  CHECK(log10_regret(10.0 - 1e-10, 10.0) == doctest::Approx(-12.0));
}

TEST_CASE("config defaults and validation") {
  RunConfig c;
  CHECK(c.resolved_init(5) == 6);
  CHECK(c.resolved_init(1) == 3);  // max{3, n_z + 1}
  c.budget = 2;
  CHECK_THROWS_AS(c.validate(5), std::invalid_argument);  // budget < init
  c.budget = 6;
  c.validate(5);  // budget == init is a legal design-only run
}

TEST_CASE("latin hypercube init strata") {
  Vec lo = Vec::Constant(2, -1.0);
  Vec hi = Vec::Constant(2, 3.0);
  Eigen::MatrixXd X = lhs_init(lo, hi, 4, 7);
  REQUIRE(X.rows() == 4);
  for (int k = 0; k < 2; ++k) {
    std::vector<bool> seen(4, false);
    for (int i = 0; i < 4; ++i) {
      double u = (X(i, k) + 1.0) / 4.0;
      int s = std::min(3, static_cast<int>(u * 4.0));
      CHECK_FALSE(seen[s]);
      seen[s] = true;
    }
  }
}

TEST_CASE("every variant spends exactly the configured budget") {
  for (Variant v : {Variant::mWB2CF, Variant::EICF, Variant::BlackBoxEI,
                    Variant::BlackBoxPI, Variant::Random}) {
    CAPTURE(variant_name(v));
    GreyBoxProblem p = make_problem("toy-hydrology");
    RunRecord rec = run_experiment(p, small_config(v, 8, 3));
    CHECK_FALSE(rec.aborted);
    CHECK(p.black_box_calls == 8);
    CHECK(rec.iterations.size() == 8);
  }
}

TEST_CASE("degenerate run with budget equal to the initial design") {
  GreyBoxProblem p = make_problem("rastrigin");
  RunConfig c = small_config(Variant::mWB2CF, 3, 1);
  REQUIRE(c.resolved_init(p.dim_z) == 3);
  RunRecord rec = run_experiment(p, c);
  CHECK(p.black_box_calls == 3);
  CHECK(rec.iterations.size() == 3);
  // initialization rows carry no scale and no trust level
  for (const auto& it : rec.iterations) {
    CHECK(it.scale == 0.0);
  }
}

TEST_CASE("same seed reproduces the run bit for bit") {
  for (Variant v : {Variant::mWB2CF, Variant::BlackBoxEI}) {
    CAPTURE(variant_name(v));
    GreyBoxProblem p1 = make_problem("toy-hydrology");
    GreyBoxProblem p2 = make_problem("toy-hydrology");
    RunConfig c = small_config(v, 7, 19);
    RunRecord a = run_experiment(p1, c, 0.599788);
    RunRecord b = run_experiment(p2, c, 0.599788);
    // timing fields differ between runs; compare the core record JSON
    auto strip = [](RunRecord r) {
      for (auto& it : r.iterations) {
        it.t_gp.clear();
        it.t_opt = it.t_eval = 0.0;
      }
      return record_to_json(r);
    };
    CHECK(strip(a) == strip(b));
  }
}

TEST_CASE("different seeds explore differently") {
  GreyBoxProblem p1 = make_problem("rastrigin");
  GreyBoxProblem p2 = make_problem("rastrigin");
  RunRecord a = run_experiment(p1, small_config(Variant::Random, 6, 1));
  RunRecord b = run_experiment(p2, small_config(Variant::Random, 6, 2));
  bool differ = false;
  for (size_t i = 0; i < a.iterations.size(); ++i) {
    if (a.iterations[i].x != b.iterations[i].x) differ = true;
  }
  CHECK(differ);
}

TEST_CASE("incumbent trace is monotone and matches the feasible minimum") {
  GreyBoxProblem p = make_problem("rosen-suzuki");
  RunRecord rec = run_experiment(p, small_config(Variant::Random, 12, 11));
  double best = kInf;
  double prev = kInf;
  for (const auto& it : rec.iterations) {
    if (it.feasible) best = std::min(best, it.objective);
    CHECK(it.incumbent == best);
    CHECK(it.incumbent <= prev);
    prev = it.incumbent;
    // every query respects the box
    for (int k = 0; k < p.dim_x; ++k) {
      CHECK(it.x(k) >= p.lower(k) - 1e-12);
      CHECK(it.x(k) <= p.upper(k) + 1e-12);
    }
  }
  CHECK(rec.final_incumbent() == best);
}

TEST_CASE("regret trace is populated when the reference optimum is known") {
  GreyBoxProblem p = make_problem("rastrigin");
  RunRecord rec = run_experiment(p, small_config(Variant::Random, 8, 5), 0.0);
  for (const auto& it : rec.iterations) {
    if (std::isfinite(it.incumbent)) {
      CHECK(it.log10_regret ==
            doctest::Approx(log10_regret(it.incumbent, 0.0)).epsilon(1e-12));
    } else {
      CHECK(std::isinf(it.log10_regret));
    }
  }
  // without a reference the column stays NaN
  GreyBoxProblem q = make_problem("rastrigin");
  RunRecord rec2 = run_experiment(q, small_config(Variant::Random, 4, 5));
  for (const auto& it : rec2.iterations) {
    CHECK(std::isnan(it.log10_regret));
  }
}

TEST_CASE("trust levels anneal from tau0 toward zero over the run") {
  GreyBoxProblem p = make_problem("toy-hydrology");
  RunConfig c = small_config(Variant::mWB2CF, 10, 2);
  RunRecord rec = run_experiment(p, c);
  int init = c.resolved_init(p.dim_z);
  REQUIRE(static_cast<int>(rec.iterations.size()) == 10);
  double prev = -kInf;
  for (int i = init; i < 10; ++i) {
    const auto& it = rec.iterations[i];
    REQUIRE(it.tau.size() == p.num_g);
    CHECK(it.tau(0) >= c.tau0 - 1e-12);
    CHECK(it.tau(0) <= 1e-12);
    CHECK(it.tau(0) >= prev - 1e-12);  // nondecreasing toward 0
    prev = it.tau(0);
  }
  // the final model-based iteration runs at (or at least near) tau = 0
  CHECK(rec.iterations.back().tau(0) >= -0.5);
}

TEST_CASE("a simulator that fails once is retried with a perturbed query") {
  GreyBoxProblem p = make_problem("rastrigin");
  auto inner = p.black_box;
  int calls = 0;
  int failures = 0;
  p.black_box = [inner, &calls, &failures](const Vec& z) {
    ++calls;
    if (calls == 5) {
      ++failures;
      throw SimulatorError("transient failure", z);
    }
    return inner(z);
  };
  RunRecord rec = run_experiment(p, small_config(Variant::Random, 8, 23));
  CHECK_FALSE(rec.aborted);
  CHECK(failures == 1);
  // the budget counts recorded evaluations; the failed attempt is the one
  // extra raw simulator invocation
  CHECK(rec.iterations.size() == 8);
  CHECK(calls == 9);
}

TEST_CASE("a persistently failing simulator aborts with a partial record") {
  GreyBoxProblem p = make_problem("rastrigin");
  auto inner = p.black_box;
  int calls = 0;
  p.black_box = [inner, &calls](const Vec& z) -> Vec {
    ++calls;
    if (calls >= 5) throw SimulatorError("hard failure", z);
    return inner(z);
  };
  RunRecord rec = run_experiment(p, small_config(Variant::Random, 10, 23));
  CHECK(rec.aborted);
  CHECK_FALSE(rec.abort_reason.empty());
  CHECK(rec.iterations.size() == 4);
}

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::mWB2CF, Variant::EICF, Variant::BlackBoxEI,
                    Variant::BlackBoxPI, Variant::Random}) {
    CHECK(variant_from_name(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(variant_from_name("nope"), std::invalid_argument);
}
