#include <doctest.h>

#include <random>
#include <vector>

#include "sdad/errors.hpp"
#include "sdad/rainflow.hpp"
#include "support.hpp"

using testsupport::soc_of;

TEST_CASE("switching times include endpoints and direction reversals") {
  CHECK(sdad::find_switching_times(soc_of({0.1, 0.8, 0.3, 0.9})) ==
        std::vector<int>{0, 1, 2, 3});
  CHECK(sdad::find_switching_times(soc_of({0.1, 0.5, 0.9})) == std::vector<int>{0, 2});
}

TEST_CASE("zero steps inherit the previous direction") {
  // Plateau inside a monotone run creates no switching node.
  CHECK(sdad::find_switching_times(soc_of({0.1, 0.5, 0.5, 0.9})) == std::vector<int>{0, 3});
  // Plateau at the top still yields a single reversal node after it.
  CHECK(sdad::find_switching_times(soc_of({0.0, 1.0, 1.0, 0.0})) == std::vector<int>{0, 2, 3});
}

TEST_CASE("leading flat run carries no direction") {
  CHECK(sdad::find_switching_times(soc_of({0.5, 0.5, 0.9, 0.1})) == std::vector<int>{0, 2, 3});
}

TEST_CASE("flat profile keeps only the endpoints") {
  CHECK(sdad::find_switching_times(soc_of({0.5, 0.5, 0.5})) == std::vector<int>{0, 2});
}

TEST_CASE("triple_diff reads consecutive swings around a position") {
  const auto x = soc_of({0.1, 0.8, 0.3, 0.9});
  const std::vector<int> S{0, 1, 2, 3};
  const auto d = sdad::triple_diff(x, S, 2);
  CHECK(d[0] == doctest::Approx(0.7));
  CHECK(d[1] == doctest::Approx(0.5));
  CHECK(d[2] == doctest::Approx(0.6));
}

TEST_CASE("triple_diff rejects positions without three swings") {
  const auto x = soc_of({0.1, 0.8, 0.3, 0.9});
  const std::vector<int> S{0, 3};
  CHECK_THROWS_AS(sdad::triple_diff(x, S, 1), sdad::IndexError);
  CHECK_THROWS_AS(sdad::triple_diff(x, S, 2), sdad::IndexError);
}

TEST_CASE("edge_direction puts the higher node first, later node on ties") {
  const auto x = soc_of({0.1, 0.8});
  CHECK(sdad::edge_direction(x, {0, 1}, 1) == std::pair<int, int>{1, 0});
  const auto flat = soc_of({0.5, 0.5, 0.5});
  CHECK(sdad::edge_direction(flat, {0, 2}, 1) == std::pair<int, int>{2, 0});
}

TEST_CASE("four node profile extracts one inner cycle") {
  const auto dec = sdad::rainflow_count(soc_of({0.1, 0.8, 0.3, 0.9}));
  REQUIRE(dec.depths.size() == 3);
  CHECK(dec.depths[0] == doctest::Approx(0.5));
  CHECK(dec.depths[1] == doctest::Approx(0.5));
  CHECK(dec.depths[2] == doctest::Approx(0.8));
  CHECK(dec.full_cycles == std::vector<std::pair<int, int>>{{1, 2}});
  CHECK(dec.residual == std::vector<int>{0, 3});
}

TEST_CASE("six node profile extracts two cycles in order") {
  const auto dec = sdad::rainflow_count(soc_of({0.1, 0.9, 0.4, 0.6, 0.3, 1.0}));
  REQUIRE(dec.depths.size() == 5);
  const double want[] = {0.2, 0.2, 0.6, 0.6, 0.9};
  for (int i = 0; i < 5; ++i) CHECK(dec.depths[i] == doctest::Approx(want[i]));
  CHECK(dec.full_cycles == std::vector<std::pair<int, int>>{{3, 2}, {1, 4}});
  CHECK(dec.residual == std::vector<int>{0, 5});
}

TEST_CASE("flat profile counts one zero-depth residual pair") {
  const auto dec = sdad::rainflow_count(soc_of({0.5, 0.5, 0.5}));
  REQUIRE(dec.depths.size() == 2);
  CHECK(dec.depths[0] == 0.0);
  CHECK(dec.depths[1] == 0.0);
  CHECK(dec.full_cycles.empty());
  CHECK(dec.residual == std::vector<int>{0, 2});
}

TEST_CASE("plateau at the top splits into two residual half-cycles") {
  const auto dec = sdad::rainflow_count(soc_of({0.0, 1.0, 1.0, 0.0}));
  REQUIRE(dec.depths.size() == 3);
  CHECK(dec.depths[0] == doctest::Approx(1.0));
  CHECK(dec.depths[1] == doctest::Approx(1.0));
  CHECK(dec.depths[2] == 0.0);
  CHECK(dec.full_cycles.empty());
  CHECK(dec.residual == std::vector<int>{0, 2, 3});
}

TEST_CASE("leading flat run leaves the two trailing half-cycles") {
  const auto dec = sdad::rainflow_count(soc_of({0.5, 0.5, 0.9, 0.1}));
  REQUIRE(dec.depths.size() == 3);
  CHECK(dec.depths[0] == doctest::Approx(0.4));
  CHECK(dec.depths[1] == doctest::Approx(0.8));
  CHECK(dec.depths[2] == 0.0);
  CHECK(dec.residual == std::vector<int>{0, 2, 3});
}

TEST_CASE("monotone profile is a single half-cycle") {
  const auto dec = sdad::rainflow_count(soc_of({0.0, 1.0}));
  REQUIRE(dec.depths.size() == 1);
  CHECK(dec.depths[0] == doctest::Approx(1.0));
  CHECK(dec.residual == std::vector<int>{0, 1});
}

TEST_CASE("depth vector is zero padded to one entry per step") {
  std::mt19937 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = testsupport::walk_profile(gen, 12);
    const auto dec = sdad::detail::rainflow_count(x);
    REQUIRE(dec.depths.size() == 11);
    const Eigen::Index counted =
        2 * static_cast<Eigen::Index>(dec.full_cycles.size()) +
        static_cast<Eigen::Index>(dec.residual.size()) - 1;
    for (Eigen::Index k = counted; k < dec.depths.size(); ++k) CHECK(dec.depths[k] == 0.0);
  }
}

TEST_CASE("total counted swing matches the profile's total variation") {
  // Every monotone segment lands in exactly one half-cycle, so depths sum to
  // the total variation of the profile.
  std::mt19937 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd x = testsupport::uniform_profile(gen, 2 + trial % 24);
    const auto dec = sdad::detail::rainflow_count(x);
    double tv = 0.0;
    for (Eigen::Index t = 0; t + 1 < x.size(); ++t) tv += std::abs(x[t + 1] - x[t]);
    CHECK(dec.depths.sum() == doctest::Approx(tv).epsilon(1e-12));
  }
}

TEST_CASE("small-buffer depth extraction matches the allocating variant") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int nodes = 2 + trial % 4;
    const Eigen::VectorXd x = trial % 2 == 0 ? testsupport::uniform_profile(gen, nodes)
                                             : testsupport::quantized_profile(gen, nodes);
    const auto dec = sdad::detail::rainflow_count(x);
    double depths[4];
    int scratch[5];
    sdad::detail::rainflow_depths_small(x.data(), nodes, depths, scratch);
    std::vector<double> a(dec.depths.data(), dec.depths.data() + nodes - 1);
    std::vector<double> b(depths, depths + nodes - 1);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (int i = 0; i < nodes - 1; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
  }
}

TEST_CASE("profiles outside the unit box are rejected") {
  CHECK_THROWS_AS(soc_of({0.5}), sdad::InvalidProfileError);
  CHECK_THROWS_AS(soc_of({0.5, 1.5}), sdad::InvalidProfileError);
  CHECK_THROWS_AS(soc_of({0.5, -0.1}), sdad::InvalidProfileError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(soc_of({0.5, nan}), sdad::InvalidProfileError);
}

TEST_CASE("switching index lists are validated") {
  const auto x = soc_of({0.1, 0.8, 0.3, 0.9});
  CHECK_THROWS_AS(sdad::triple_diff(x, {0, 1, 1, 3}, 2), sdad::IndexError);
  CHECK_THROWS_AS(sdad::triple_diff(x, {0, 1, 2, 7}, 2), sdad::IndexError);
}
