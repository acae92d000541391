#include <cstdio>

#include "sdad/cyclegraph.hpp"
#include "sdad/degradation.hpp"
#include "sdad/demand.hpp"
#include "sdad/dispatch.hpp"
#include "sdad/rainflow.hpp"

int main() {
  sdad::DispatchConfig cfg;
  cfg.g_max = 2000.0;
  const auto prob = sdad::assemble_problem(cfg, sdad::synthetic_demand({.horizon = 24}));
  const auto sol = sdad::solve_sdad(prob);
  const Eigen::VectorXd x = sol.soc.values();
  const int T = 24;

  std::printf("trace tail:");
  const auto& tr = sol.objective_trace;
  for (size_t i = tr.size() >= 6 ? tr.size() - 6 : 0; i < tr.size(); ++i)
    std::printf(" %.6f", tr[i]);
  std::printf("\n");

  // Frozen-pattern wear gradient at the final point.
  const auto M = sdad::build_incidence(sol.soc, sdad::rainflow_count(sol.soc));
  const double coeff =
      prob.degradation.replacement_cost() * prob.degradation.alpha_b / 2.0;
  const double beta = prob.degradation.beta_b;
  Eigen::VectorXd gfrozen = Eigen::VectorXd::Zero(T + 1);
  for (const auto& [hi, lo] : M.edges()) {
    const double d = x[hi] - x[lo];
    if (d > 0.0) {
      const double w = coeff * beta * std::pow(d, beta - 1.0);
      gfrozen[hi] += w;
      gfrozen[lo] -= w;
    }
  }
  const Eigen::VectorXd csub = sdad::cycling_cost_subgradient(sol.soc, prob.degradation);

  // Central finite difference of the true cycling cost.
  Eigen::VectorXd gfd = Eigen::VectorXd::Zero(T + 1);
  const double h = 1e-7;
  for (int j = 1; j < T; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    gfd[j] = (sdad::cycling_cost_profile(sdad::SocProfile(xp), prob.degradation) -
              sdad::cycling_cost_profile(sdad::SocProfile(xm), prob.degradation)) /
             (2.0 * h);
  }
  std::printf("  j     x        frozen        csub          fd\n");
  for (int j = 1; j < T; ++j) {
    std::printf("%3d %8.5f %12.4f %12.4f %12.4f%s\n", j, x[j], gfrozen[j], csub[j], gfd[j],
                std::abs(gfrozen[j] - csub[j]) > 1.0 ? "   <-- mismatch" : "");
  }
  std::printf("edges:");
  for (const auto& [hi, lo] : M.edges()) std::printf(" (%d,%d)", static_cast<int>(hi), static_cast<int>(lo));
  std::printf("\n");
  return 0;
}
