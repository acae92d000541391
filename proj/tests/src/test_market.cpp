#include <doctest.h>

#include <random>

#include "sdad/demand.hpp"
#include "sdad/dispatch.hpp"
#include "sdad/errors.hpp"
#include "sdad/market.hpp"
#include "support.hpp"

using testsupport::soc_of;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Three-slot price spike with a small quadratic-wear battery.
sdad::DispatchProblem spike_problem() {
  sdad::DispatchConfig cfg;
  cfg.capacity_mwh = 10.0;
  cfg.capital_cost_per_kwh = 200.0;
  cfg.beta_b = 2.0;
  cfg.u_min = -10.0;
  cfg.u_max = 10.0;
  cfg.g_max = 100.0;
  return sdad::assemble_problem(cfg, vec({50.0, 50.0, 50.0}));
}

}  // namespace

TEST_CASE("prices require a converged dispatch") {
  const auto prob = spike_problem();
  sdad::DispatchSolution sol;
  sol.converged = false;
  CHECK_THROWS_AS(sdad::extract_prices(sol, prob), sdad::SolverError);
}

TEST_CASE("generator best response clamps the price inversion") {
  const auto prob = spike_problem();
  const Eigen::VectorXd g = sdad::generator_best_response(vec({10.0, 30.0, 500.0}), prob);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(50.0));
  CHECK(g[2] == 100.0);
  CHECK_THROWS_AS(sdad::generator_best_response(vec({10.0}), prob), sdad::ConfigError);
}

TEST_CASE("storage best response to a price spike matches the closed form") {
  const auto prob = spike_problem();
  const auto r = sdad::storage_best_response(vec({10.0, 50.0, 10.0}), prob);
  REQUIRE(r.converged);
  // Charge a, discharge 2a, charge a with a = 40/31.44.
  const double a = 40.0 / 31.44;
  CHECK(r.storage_power[0] == doctest::Approx(a).epsilon(1e-3));
  CHECK(r.storage_power[1] == doctest::Approx(-2.0 * a).epsilon(1e-3));
  CHECK(r.storage_power[2] == doctest::Approx(a).epsilon(1e-3));
  CHECK(r.profit == doctest::Approx(40.0 * a).epsilon(1e-4));
  CHECK(r.wear_cost == doctest::Approx(31.44 * a * a).epsilon(1e-3));
  CHECK(r.soc.values()[0] == 0.5);
  CHECK(r.soc.values()[3] == 0.5);
  CHECK_THROWS_AS(sdad::storage_best_response(vec({10.0, 50.0}), prob), sdad::ConfigError);
}

TEST_CASE("dispatch at its own prices leaves no profit on the table") {
  sdad::DispatchConfig cfg;
  cfg.g_max = 2100.0;
  const auto prob = sdad::assemble_problem(cfg, sdad::synthetic_demand({.horizon = 24}));
  const auto sol = sdad::solve_sdad(prob);
  REQUIRE(sol.converged);
  const auto rep = sdad::verify_incentive_compatibility(sol, prob);
  CHECK(rep.pass);
  CHECK(rep.generator_gap <= sdad::kGeneratorGapTol);
  CHECK(rep.storage_gap <= sdad::kStorageGapTol);
  const double scale = std::max(1.0, std::abs(rep.consumer_payment));
  CHECK(std::abs(rep.accounting_residual) <= 1e-9 * scale);
}

TEST_CASE("certificate on the spike best response") {
  const auto prob = spike_problem();
  const auto r = sdad::storage_best_response(vec({10.0, 50.0, 10.0}), prob);
  REQUIRE(r.converged);
  const auto cert = sdad::uniqueness_certificate(r.soc, prob);
  CHECK(cert.applicable);
  CHECK(cert.unique);
  CHECK(cert.rank == 3);
  CHECK(cert.stacked_rank == 4);
  CHECK(cert.horizon == 3);
  CHECK(cert.reason.empty());
}

TEST_CASE("certificate declines non-quadratic wear") {
  sdad::DispatchConfig cfg;
  cfg.capacity_mwh = 10.0;
  cfg.u_min = -10.0;
  cfg.u_max = 10.0;
  const auto prob = sdad::assemble_problem(cfg, vec({50.0, 50.0, 50.0}));
  const auto cert = sdad::uniqueness_certificate(soc_of({0.5, 0.6, 0.45, 0.5}), prob);
  CHECK_FALSE(cert.applicable);
  CHECK(cert.reason == "wear exponent is not quadratic");
}

TEST_CASE("certificate declines counting boundaries and active bounds") {
  const auto prob = spike_problem();
  const auto tied = sdad::uniqueness_certificate(soc_of({0.5, 0.7, 0.5, 0.5}), prob);
  CHECK_FALSE(tied.applicable);
  CHECK(tied.reason == "profile sits on a counting boundary");

  const auto pinned = sdad::uniqueness_certificate(soc_of({0.5, 1.0, 0.25, 0.5}), prob);
  CHECK_FALSE(pinned.applicable);
  CHECK(pinned.reason == "SoC box is active");

  auto tight = spike_problem();
  tight.u_min = -2.0;
  tight.u_max = 2.0;
  const auto capped = sdad::uniqueness_certificate(soc_of({0.4, 0.6, 0.3, 0.4}), tight);
  CHECK_FALSE(capped.applicable);
  CHECK(capped.reason == "storage power bound is active");
}

TEST_CASE("certificate reports deficiency on nested cycles") {
  sdad::DispatchConfig cfg;
  cfg.capacity_mwh = 10.0;
  cfg.capital_cost_per_kwh = 200.0;
  cfg.beta_b = 2.0;
  cfg.u_min = -10.0;
  cfg.u_max = 10.0;
  cfg.g_max = 100.0;
  const auto prob = sdad::assemble_problem(cfg, vec({50.0, 50.0, 50.0, 50.0, 50.0}));
  const auto cert =
      sdad::uniqueness_certificate(soc_of({0.1, 0.9, 0.4, 0.6, 0.3, 1.0}), prob);
  CHECK(cert.applicable);
  CHECK_FALSE(cert.unique);
  CHECK(cert.rank == 3);
  CHECK(cert.horizon == 5);
  CHECK(cert.reason == "incidence matrix is rank deficient");
}

TEST_CASE("certificate validates the profile length") {
  const auto prob = spike_problem();
  CHECK_THROWS_AS(sdad::uniqueness_certificate(soc_of({0.5, 0.6, 0.5}), prob),
                  sdad::ConfigError);
}
