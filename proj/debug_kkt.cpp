#include <cstdio>

#include "sdad/demand.hpp"
#include "sdad/dispatch.hpp"

int main() {
  sdad::DispatchConfig cfg;
  cfg.g_max = 2000.0;
  const auto prob = sdad::assemble_problem(cfg, sdad::synthetic_demand({.horizon = 24}));
  const auto sol = sdad::solve_sdad(prob);
  std::printf("converged=%d outer=%d inner=%d obj=%.10f kkt=%.6g\n", sol.converged,
              sol.outer_iterations, sol.inner_iterations, sol.total_cost, sol.kkt_residual);
  const auto rep = sdad::kkt_residual(sol, prob);
  std::printf("prim=%.3g st_gen=%.3g st_u=%.3g st_x=%.3g dual=%.3g cs=%.3g\n",
              rep.primal_infeasibility, rep.stationarity_generator,
              rep.stationarity_storage_power, rep.stationarity_soc, rep.dual_infeasibility,
              rep.complementary_slackness);
  const auto& x = sol.soc.values();
  const double E = prob.degradation.capacity_mwh;
  for (int t = 0; t < 24; ++t) {
    const double ru = rep.lambda[t] - rep.theta[t] / E;
    std::printf(
        "t=%2d D=%7.1f g=%9.3f u=%9.4f x+=%8.6f lam=%8.3f theta/E=%8.3f ru=%9.5f nu=(%.3g,%.3g)\n",
        t, prob.demand[t], sol.generation[t], sol.storage_power[t], x[t + 1], rep.lambda[t],
        rep.theta[t] / E, ru, rep.nu_upper[t], rep.nu_lower[t]);
  }
  std::printf("degenerate:");
  for (int t : rep.degenerate_slots) std::printf(" %d", t);
  std::printf("\n");
  return 0;
}
