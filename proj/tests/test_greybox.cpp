#include <cmath>

#include "doctest.h"

#include "cobalt/greybox.hpp"
#include "cobalt/testbed.hpp"

using namespace cobalt;
using Vec = Eigen::VectorXd;

namespace {

Vec make_vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vec>(std::data(v), static_cast<int>(v.size()));
}

}  // namespace

TEST_CASE("input selection is a pure component copy") {
  GreyBoxProblem ident;
  ident.name = "ident";
  ident.dim_x = ident.dim_y = ident.dim_z = 2;
  ident.selection = Eigen::MatrixXd::Identity(2, 2);
  ident.lower = make_vec({-2, -2});
  ident.upper = make_vec({2, 2});
  ident.objective = [](const Vec&, const Vec& y) { return y(0); };
  ident.black_box = [](const Vec& z) { return z; };
  Vec x = make_vec({0.0, -1.0});
  CHECK(ident.select_inputs(x) == x);

  auto rastrigin = make_problem("rastrigin");
  Vec z = rastrigin.select_inputs(make_vec({5.0, -5.0, 1.5}));
  REQUIRE(z.size() == 1);
  CHECK(z(0) == 1.5);  // bit-identical, no arithmetic

  auto rosen_suzuki = make_problem("rosen-suzuki");
  Vec z2 = rosen_suzuki.select_inputs(make_vec({0.0, 1.0, 2.0, -1.0}));
  CHECK(z2(0) == 2.0);
  CHECK(z2(1) == -1.0);
}

TEST_CASE("evaluate populates the full tuple and counts calls") {
  auto p = make_problem("rastrigin");
  long before = p.black_box_calls;
  Evaluation e = evaluate(p, Vec::Zero(3));
  CHECK(p.black_box_calls == before + 1);
  CHECK(e.objective == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(e.feasible);
  CHECK(e.z == p.select_inputs(e.x));

  auto rs = make_problem("rosen-suzuki");
  Evaluation ers = evaluate(rs, make_vec({0.0, 1.0, 2.0, -1.0}));
  CHECK(ers.objective == doctest::Approx(-44.0).epsilon(1e-12));
  CHECK(ers.constraint_values.maxCoeff() <= 1e-12);
  CHECK(ers.feasible);

  auto th = make_problem("toy-hydrology");
  Evaluation eth = evaluate(th, make_vec({0.1951, 0.4047}));
  CHECK(eth.objective == doctest::Approx(0.5998).epsilon(1e-12));
  CHECK(std::abs(eth.constraint_values(0)) < 1e-4);  // active constraint
}

TEST_CASE("evaluate is deterministic for a deterministic simulator") {
  auto p = make_problem("colville");
  Vec x = make_vec({80.0, 40.0, 30.0, 30.0, 30.0});
  Evaluation a = evaluate(p, x);
  Evaluation b = evaluate(p, x);
  CHECK(a.objective == b.objective);
  CHECK(a.y == b.y);
  CHECK(a.constraint_values == b.constraint_values);
}

TEST_CASE("simulator failures carry the query point") {
  GreyBoxProblem p;
  p.name = "fails";
  p.dim_x = p.dim_y = p.dim_z = 1;
  p.selection = Eigen::MatrixXd::Identity(1, 1);
  p.lower = make_vec({0});
  p.upper = make_vec({1});
  p.objective = [](const Vec&, const Vec& y) { return y(0); };
  p.black_box = [](const Vec& z) -> Vec {
    throw std::runtime_error("simulator blew up");
    return z;
  };
  Vec x = make_vec({0.25});
  try {
    evaluate(p, x);
    FAIL("expected a simulator error");
  } catch (const SimulatorError& err) {
    CHECK(err.query() == x);
  }
}

TEST_CASE("observation set keeps matrices in sync and filters incumbents") {
  auto p = make_problem("toy-hydrology");
  ObservationSet obs;
  CHECK(obs.incumbent() == std::numeric_limits<double>::infinity());

  obs.append(evaluate(p, make_vec({0.9, 0.9})));   // infeasible (norm circle)
  CHECK(obs.incumbent() == std::numeric_limits<double>::infinity());
  obs.append(evaluate(p, make_vec({0.3, 0.7})));
  obs.append(evaluate(p, make_vec({0.5, 0.6})));
  REQUIRE(obs.size() == 3);
  CHECK(obs.inputs().rows() == 3);
  CHECK(obs.inputs()(1, 0) == 0.3);
  CHECK(obs.targets(0)(2) == obs.entries()[2].y(0));

  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : obs.entries()) {
    if (e.feasible) best = std::min(best, e.objective);
  }
  CHECK(obs.incumbent() == best);
}

TEST_CASE("feasibility flag honours the tolerance on raw constraint values") {
  GreyBoxProblem p;
  p.name = "tol";
  p.dim_x = p.dim_y = p.dim_z = 1;
  p.num_g = 1;
  p.selection = Eigen::MatrixXd::Identity(1, 1);
  p.lower = make_vec({-1});
  p.upper = make_vec({1});
  p.objective = [](const Vec&, const Vec&) { return 0.0; };
  p.constraints = [](const Vec& x, const Vec&) {
    Vec g(1);
    g(0) = x(0);
    return g;
  };
  p.black_box = [](const Vec& z) { return z; };
  CHECK(evaluate(p, make_vec({0.5e-8})).feasible);
  CHECK_FALSE(evaluate(p, make_vec({2e-8})).feasible);
}
