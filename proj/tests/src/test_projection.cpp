#include <doctest.h>

#include <random>

#include "sdad/errors.hpp"
#include "sdad/projection.hpp"
#include "support.hpp"

namespace {

Eigen::VectorXd constant(Eigen::Index n, double v) {
  return Eigen::VectorXd::Constant(n, v);
}

}  // namespace

TEST_CASE("polytope construction validates its bounds") {
  CHECK_THROWS_AS(sdad::ChainPolytope(0.5, Eigen::VectorXd(), Eigen::VectorXd()),
                  sdad::ConfigError);
  CHECK_THROWS_AS(sdad::ChainPolytope(1.5, constant(2, -0.1), constant(2, 0.1)),
                  sdad::ConfigError);
  CHECK_THROWS_AS(sdad::ChainPolytope(0.5, constant(2, 0.2), constant(2, 0.1)),
                  sdad::ConfigError);
}

TEST_CASE("emptiness is decided by interval propagation") {
  // Steps forced positive cannot return to the anchor.
  sdad::ChainPolytope forced_up(0.5, constant(3, 0.1), constant(3, 0.2));
  CHECK_FALSE(forced_up.feasible_exists());
  // Anchor close to the ceiling with a mandatory climb leaves the box.
  sdad::ChainPolytope leaves_box(0.9, constant(2, 0.2), constant(2, 0.2));
  CHECK_FALSE(leaves_box.feasible_exists());
  sdad::ChainPolytope ok(0.5, constant(3, -0.2), constant(3, 0.2));
  CHECK(ok.feasible_exists());
}

TEST_CASE("projecting onto an empty set is refused") {
  sdad::ChainPolytope empty(0.5, constant(3, 0.1), constant(3, 0.2));
  CHECK_THROWS_AS(empty.project(constant(4, 0.5)), sdad::SolverError);
}

TEST_CASE("a feasible point projects to itself bit for bit") {
  sdad::ChainPolytope X(0.5, constant(4, -0.3), constant(4, 0.3));
  Eigen::VectorXd y(5);
  y << 0.5, 0.62, 0.48, 0.71, 0.5;
  const Eigen::VectorXd x = X.project(y);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(x[i] == y[i]);
}

TEST_CASE("projection pins the endpoints exactly") {
  std::mt19937 gen(41);
  sdad::ChainPolytope X(0.5, constant(6, -0.2), constant(6, 0.2));
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd y = testsupport::uniform_profile(gen, 7);
    const Eigen::VectorXd x = X.project(y);
    CHECK(x[0] == 0.5);
    CHECK(x[6] == 0.5);
    CHECK(X.violation(x) <= 1e-9);
  }
}

TEST_CASE("projection matches the active-set oracle with one interior node") {
  std::mt19937 gen(43);
  std::uniform_real_distribution<double> widen(-0.5, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd lo(2), hi(2);
    for (int t = 0; t < 2; ++t) {
      const double b = widen(gen);
      lo[t] = b - 0.3;
      hi[t] = b + 0.1;
    }
    sdad::ChainPolytope X(0.4, lo, hi);
    if (!X.feasible_exists()) continue;
    const Eigen::VectorXd y = 2.0 * testsupport::uniform_profile(gen, 3).array() - 0.5;
    const Eigen::VectorXd got = X.project(y);
    const Eigen::VectorXd want = testsupport::project_oracle(X, y);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
  }
}

TEST_CASE("projection matches the active-set oracle with two interior nodes") {
  std::mt19937 gen(47);
  std::uniform_real_distribution<double> widen(-0.4, 0.4);
  int tested = 0;
  for (int trial = 0; trial < 400 && tested < 150; ++trial) {
    Eigen::VectorXd lo(3), hi(3);
    for (int t = 0; t < 3; ++t) {
      const double b = widen(gen);
      lo[t] = b - 0.35;
      hi[t] = b + 0.15;
    }
    sdad::ChainPolytope X(0.55, lo, hi);
    if (!X.feasible_exists()) continue;
    ++tested;
    const Eigen::VectorXd y = 2.0 * testsupport::uniform_profile(gen, 4).array() - 0.5;
    const Eigen::VectorXd got = X.project(y);
    const Eigen::VectorXd want = testsupport::project_oracle(X, y);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
  }
  CHECK(tested >= 100);
}

TEST_CASE("projection is idempotent and nonexpansive") {
  std::mt19937 gen(53);
  sdad::ChainPolytope X(0.5, constant(8, -0.15), constant(8, 0.25));
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd y = 3.0 * testsupport::uniform_profile(gen, 9).array() - 1.0;
    const Eigen::VectorXd z = 3.0 * testsupport::uniform_profile(gen, 9).array() - 1.0;
    const Eigen::VectorXd py = X.project(y);
    const Eigen::VectorXd pz = X.project(z);
    CHECK((X.project(py) - py).norm() <= 1e-9);
    CHECK((py - pz).norm() <= (y - z).norm() + 1e-9);
  }
}

TEST_CASE("flat trajectory sits at the anchor when zero steps are allowed") {
  sdad::ChainPolytope X(0.7, constant(5, -0.1), constant(5, 0.1));
  const Eigen::VectorXd f = X.flat();
  for (Eigen::Index i = 0; i < f.size(); ++i) CHECK(f[i] == 0.7);
  CHECK(X.violation(f) == 0.0);
}

TEST_CASE("violation reports the worst broken constraint") {
  sdad::ChainPolytope X(0.5, constant(2, -0.1), constant(2, 0.1));
  Eigen::VectorXd x(3);
  x << 0.5, 0.9, 0.5;
  // Both steps overshoot the slab by 0.3.
  CHECK(X.violation(x) == doctest::Approx(0.3));
  x << 0.5, 0.55, 0.5;
  CHECK(X.violation(x) == 0.0);
}

TEST_CASE("mismatched vector length is rejected") {
  sdad::ChainPolytope X(0.5, constant(2, -0.1), constant(2, 0.1));
  CHECK_THROWS_AS(X.project(constant(5, 0.5)), sdad::StructuralError);
}
