#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "sdad/cyclegraph.hpp"
#include "sdad/errors.hpp"
#include "sdad/rainflow.hpp"
#include "support.hpp"

using testsupport::soc_of;

namespace {

sdad::SocProfile six_node() {
  return sdad::SocProfile::from_vector({0.1, 0.9, 0.4, 0.6, 0.3, 1.0});
}

}  // namespace

TEST_CASE("incidence columns are the extracted edges in order") {
  const auto x = six_node();
  const auto M = sdad::build_incidence(x, sdad::rainflow_count(x));
  CHECK(M.rows() == 6);
  CHECK(M.cols() == 5);
  CHECK(M.edges() ==
        std::vector<std::pair<int, int>>{{3, 2}, {3, 2}, {1, 4}, {1, 4}, {5, 0}});

  const Eigen::MatrixXd D = M.dense();
  CHECK(D(3, 0) == 1.0);
  CHECK(D(2, 0) == -1.0);
  CHECK(D(5, 4) == 1.0);
  CHECK(D(0, 4) == -1.0);
  CHECK(D.cwiseAbs().sum() == 10.0);
}

TEST_CASE("transpose action on the generating profile returns the depths") {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int nodes = 2 + trial % 30;
    const Eigen::VectorXd x = trial % 3 == 0 ? testsupport::quantized_profile(gen, nodes, 6)
                                             : testsupport::walk_profile(gen, nodes);
    const auto dec = sdad::detail::rainflow_count(x);
    const auto M = sdad::detail::build_incidence(x, dec);
    const Eigen::VectorXd d = M.transpose_times(x);
    // Bit-exact: each depth is literally the same subtraction both times.
    for (Eigen::Index k = 0; k < d.size(); ++k) CHECK(d[k] == dec.depths[k]);
  }
}

TEST_CASE("depths_from_incidence equals the decomposition depths") {
  const auto x = six_node();
  const auto dec = sdad::rainflow_count(x);
  const auto M = sdad::build_incidence(x, dec);
  const Eigen::VectorXd d = sdad::depths_from_incidence(M, x);
  for (Eigen::Index k = 0; k < d.size(); ++k) CHECK(d[k] == dec.depths[k]);
}

TEST_CASE("charge discharge split orders columns by decreasing depth") {
  const auto x = six_node();
  const auto M = sdad::build_incidence(x, sdad::rainflow_count(x));
  const auto split = sdad::split_charge_discharge(M, x);

  CHECK(split.charging.edges() ==
        std::vector<std::pair<int, int>>{{5, 0}, {1, 4}, {3, 2}});
  CHECK(split.discharging.edges() == std::vector<std::pair<int, int>>{{1, 4}, {3, 2}});

  const double want_c[] = {0.9, 0.6, 0.2, 0.0, 0.0};
  const double want_d[] = {0.6, 0.2, 0.0, 0.0, 0.0};
  REQUIRE(split.charging_depths.size() == 5);
  REQUIRE(split.discharging_depths.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(split.charging_depths[i] == doctest::Approx(want_c[i]));
    CHECK(split.discharging_depths[i] == doctest::Approx(want_d[i]));
  }
}

TEST_CASE("each node starts at most one charging half-cycle") {
  // Net charging edge count per node stays in {-1,0,1}: the split inherits
  // the nesting structure of the counting, so charging half-cycles never
  // stack on a node.
  std::mt19937 gen(19);
  for (int trial = 0; trial < 400; ++trial) {
    const int nodes = 2 + trial % 30;
    const Eigen::VectorXd raw = trial % 3 == 0 ? testsupport::quantized_profile(gen, nodes, 5)
                                               : testsupport::uniform_profile(gen, nodes);
    const sdad::SocProfile x{raw};
    const auto M = sdad::build_incidence(x, sdad::rainflow_count(x));
    const auto split = sdad::split_charge_discharge(M, x);
    for (const auto& side : {split.charging, split.discharging}) {
      const Eigen::VectorXd s = side.row_sums();
      CHECK(s.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("rank report on the six node profile") {
  const auto x = six_node();
  const auto rk = sdad::rank_analysis(sdad::build_incidence(x, sdad::rainflow_count(x)));
  CHECK(rk.rank == 3);
  CHECK(rk.stacked_rank == 4);
  CHECK(rk.bounds_ok);
  CHECK(rk.stacked_is_rank_plus_one);
}

TEST_CASE("rank report on a hand-built empty matrix") {
  const sdad::IncidenceMatrix M(6, 5);
  const auto rk = sdad::rank_analysis(M);
  CHECK(rk.rank == 0);
  CHECK(rk.stacked_rank == 2);
  CHECK(rk.bounds_ok);
}

TEST_CASE("strictly widening sawtooth has full column rank") {
  // Swings strictly increase, so no full cycle is ever extracted and the
  // residual chain spans a path over every node.
  const auto x = soc_of({0.50, 0.45, 0.57, 0.40, 0.65, 0.30});
  const auto dec = sdad::rainflow_count(x);
  CHECK(dec.full_cycles.empty());
  const auto rk = sdad::rank_analysis(sdad::build_incidence(x, dec));
  CHECK(rk.rank == 5);
  CHECK(rk.stacked_rank == 6);
  CHECK(rk.bounds_ok);
  CHECK(rk.stacked_is_rank_plus_one);
}

TEST_CASE("stacked rank is rank plus one on counted matrices") {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int nodes = 2 + trial % 20;
    const Eigen::VectorXd x = testsupport::walk_profile(gen, nodes);
    const auto rk =
        sdad::rank_analysis(sdad::detail::build_incidence(x, sdad::detail::rainflow_count(x)));
    CHECK(rk.bounds_ok);
    CHECK(rk.stacked_is_rank_plus_one);
  }
}

TEST_CASE("extraction slack is the least decision margin") {
  CHECK(sdad::extraction_slack(soc_of({0.1, 0.8, 0.3, 0.9})) == doctest::Approx(0.1));
  CHECK(sdad::extraction_slack(soc_of({0.0, 1.0, 1.0, 0.0})) == 0.0);
  CHECK(sdad::extraction_slack(soc_of({0.5, 0.5, 0.5})) == 0.0);
}

TEST_CASE("boundary test flags exact ties") {
  CHECK_FALSE(sdad::is_boundary_profile(soc_of({0.1, 0.8, 0.3, 0.9})));
  CHECK(sdad::is_boundary_profile(soc_of({0.0, 1.0, 1.0, 0.0})));
  CHECK(sdad::is_boundary_profile(soc_of({0.5, 0.5, 0.5})));
}

TEST_CASE("edge list is stable under perturbations below half the slack") {
  std::mt19937 gen(31);
  std::uniform_int_distribution<int> node_pick(0, 1 << 20);
  int tested = 0;
  for (int trial = 0; trial < 300 && tested < 100; ++trial) {
    const int nodes = 3 + trial % 10;
    Eigen::VectorXd x = testsupport::uniform_profile(gen, nodes);
    // Keep clear of the unit box so the perturbed profile stays valid.
    x = 0.05 + 0.9 * x.array();
    const sdad::SocProfile prof{x};
    const double slack = sdad::extraction_slack(prof);
    if (slack < 1e-4) continue;
    ++tested;
    const auto base = sdad::build_incidence(prof, sdad::rainflow_count(prof));
    const int t = node_pick(gen) % nodes;
    for (const double sign : {1.0, -1.0}) {
      Eigen::VectorXd y = x;
      y[t] += sign * 0.49 * slack;
      const auto pert = sdad::detail::build_incidence(y, sdad::detail::rainflow_count(y));
      CHECK(pert.edges() == base.edges());
    }
  }
  CHECK(tested == 100);
}

TEST_CASE("dimension mismatches are rejected") {
  sdad::IncidenceMatrix M(4, 3);
  CHECK_THROWS_AS(sdad::IncidenceMatrix(1, 0), sdad::StructuralError);
  CHECK_THROWS_AS(M.add_edge(4, 0), sdad::StructuralError);
  CHECK_THROWS_AS(M.add_edge(2, 2), sdad::StructuralError);
  M.add_edge(1, 0);
  M.add_edge(2, 1);
  M.add_edge(3, 2);
  CHECK_THROWS_AS(M.add_edge(3, 0), sdad::StructuralError);
  CHECK_THROWS_AS(M.transpose_times(Eigen::VectorXd::Zero(3)), sdad::StructuralError);
  CHECK_THROWS_AS(M.times(Eigen::VectorXd::Zero(4)), sdad::StructuralError);
  CHECK_THROWS_AS(sdad::depths_from_incidence(M, soc_of({0.1, 0.2, 0.3})),
                  sdad::StructuralError);
}

TEST_CASE("incidence csv lists one node row per line") {
  sdad::IncidenceMatrix M(3, 2);
  M.add_edge(1, 0);
  M.add_edge(1, 2);
  std::ostringstream out;
  sdad::write_incidence_csv(M, out);
  CHECK(out.str() == "node,e0,e1\n0,-1,0\n1,1,1\n2,0,-1\n");
}
