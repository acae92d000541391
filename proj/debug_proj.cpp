#include <algorithm>
#include <cstdio>
#include <random>

#include "sdad/projection.hpp"
#include "support.hpp"

int main() {
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

    const double L = std::max({0.0, 0.4 + lo[0], 0.4 - hi[1]});
    const double U = std::min({1.0, 0.4 + hi[0], 0.4 - lo[1]});
    const double exact1 = std::clamp(y[1], L, U);

    const double d_got = (got - y).norm();
    const double d_want = (want - y).norm();
    if (std::abs(got[1] - exact1) > 1e-9 || std::abs(want[1] - exact1) > 1e-9) {
      std::printf(
          "trial %d\n  lo=[%.17g %.17g] hi=[%.17g %.17g]\n  y=[%.17g %.17g %.17g]\n"
          "  L=%.17g U=%.17g exact1=%.17g\n"
          "  got1=%.17g  want1=%.17g\n"
          "  dist(got)=%.17g dist(want)=%.17g\n"
          "  viol(got)=%.3g viol(want)=%.3g\n",
          trial, lo[0], lo[1], hi[0], hi[1], y[0], y[1], y[2], L, U, exact1, got[1], want[1],
          d_got, d_want, X.violation(got), X.violation(want));
    }
  }
  return 0;
}
