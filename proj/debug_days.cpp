#include "sdad/dispatch.hpp"
#include "sdad/market.hpp"
#include "sdad/demand.hpp"
#include <chrono>
#include <cstdio>
#include <random>
#include <exception>
int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : -1;
  std::mt19937 day_gen(110);
  double tot_solve = 0.0, tot_verify = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::uniform_real_distribution<double> amp(200.0, 600.0);
    std::uniform_real_distribution<double> peak(0.0, 24.0);
    sdad::SyntheticDemandSpec spec;
    spec.amplitude = amp(day_gen);
    spec.peak_hour = peak(day_gen);
    if (only >= 0 && i != only) continue;
    const auto prob = sdad::assemble_problem({}, sdad::synthetic_demand(spec));
    std::fprintf(stderr, "day %2d amp=%a peak=%a solving...\n", i, spec.amplitude, spec.peak_hour);
    sdad::DispatchSolution sol;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      sol = sdad::solve_sdad(prob);
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "day %2d THREW: %s\n", i, ex.what());
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    double ggap = -1, sgap = -1;
    if (sol.converged) {
      const auto rep = sdad::verify_incentive_compatibility(sol, prob);
      ggap = rep.generator_gap; sgap = rep.storage_gap;
    }
    const auto t2 = std::chrono::steady_clock::now();
    const double ds = std::chrono::duration<double>(t1 - t0).count();
    const double dv = std::chrono::duration<double>(t2 - t1).count();
    tot_solve += ds;
    tot_verify += dv;
    std::printf("day %2d amp=%7.2f peak=%6.3f conv=%d kkt=%.3g obj=%.4f ggap=%.3g sgap=%.3g "
                "solve=%.2fs verify=%.2fs outer=%ld inner=%ld\n",
                i, spec.amplitude, spec.peak_hour, int(sol.converged), sol.kkt_residual,
                sol.total_cost, ggap, sgap, ds, dv,
                long(sol.outer_iterations), long(sol.inner_iterations));
  }
  std::printf("total solve=%.2fs verify=%.2fs\n", tot_solve, tot_verify);
  return 0;
}
