#include <cmath>
#include <set>

#include "doctest.h"

#include "cobalt/rng.hpp"

using namespace cobalt;

TEST_CASE("splitmix stream is deterministic and forkable") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  SplitMix64 parent(7);
  SplitMix64 c1 = parent.fork(1);
  SplitMix64 c2 = parent.fork(2);
  CHECK(c1.next_u64() != c2.next_u64());
  // forking does not disturb the parent
  SplitMix64 parent2(7);
  parent2.fork(1);
  SplitMix64 parent3(7);
  CHECK(parent2.next_u64() == parent3.next_u64());
}

TEST_CASE("box-muller normals have sane first moments") {
  SplitMix64 rng(123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double v = rng.next_normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.03);
}

TEST_CASE("normal cdf / quantile round-trip") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  // violation probability 0.0013499 corresponds to a trust level of ~3
  CHECK(normal_quantile(1.0 - 0.0013499) == doctest::Approx(3.0).epsilon(1e-4));
  for (double t : {-3.0, -1.0, -0.1, 0.0, 0.5, 2.5}) {
    CHECK(normal_quantile(normal_cdf(t)) == doctest::Approx(t).epsilon(1e-9));
  }
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
}

TEST_CASE("latin hypercube stratifies every coordinate") {
  Eigen::VectorXd lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 4.0;
  SplitMix64 rng(5);
  Eigen::MatrixXd design = latin_hypercube(lo, hi, 4, rng);
  REQUIRE(design.rows() == 4);
  for (int d = 0; d < 2; ++d) {
    std::set<int> strata;
    for (int i = 0; i < 4; ++i) {
      double u = (design(i, d) - lo(d)) / (hi(d) - lo(d));
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      strata.insert(static_cast<int>(u * 4.0));
    }
    CHECK(strata.size() == 4);  // one point per quartile stratum
  }

  // count = 1: a single point inside the box
  SplitMix64 rng1(5);
  Eigen::MatrixXd single = latin_hypercube(lo, hi, 1, rng1);
  REQUIRE(single.rows() == 1);
  CHECK(single(0, 0) >= lo(0));
  CHECK(single(0, 1) <= hi(1));
}

TEST_CASE("shifted halton points stay in the box and are seed-stable") {
  Eigen::VectorXd lo(3), hi(3);
  lo << 0.0, -2.0, 5.0;
  hi << 1.0, 2.0, 6.0;
  SplitMix64 r1(9), r2(9);
  Eigen::MatrixXd a = shifted_halton(lo, hi, 50, r1);
  Eigen::MatrixXd b = shifted_halton(lo, hi, 50, r2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    for (int d = 0; d < 3; ++d) {
      CHECK(a(i, d) >= lo(d));
      CHECK(a(i, d) <= hi(d));
    }
  }
}
