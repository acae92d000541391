#include <benchmark/benchmark.h>

#include <random>

#include <Eigen/Core>

#include "sdad/cyclegraph.hpp"
#include "sdad/degradation.hpp"
#include "sdad/demand.hpp"
#include "sdad/dispatch.hpp"
#include "sdad/projection.hpp"
#include "sdad/rainflow.hpp"

namespace {

Eigen::VectorXd random_profile(int nodes, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd x(nodes);
  for (int i = 0; i < nodes; ++i) x[i] = dist(gen);
  return x;
}

void bm_rainflow_count(benchmark::State& state) {
  const auto x = random_profile(static_cast<int>(state.range(0)), 7u);
  for (auto _ : state) {
    auto dec = sdad::detail::rainflow_count(x);
    benchmark::DoNotOptimize(dec);
  }
}
BENCHMARK(bm_rainflow_count)->Arg(25)->Arg(49)->Arg(97);

void bm_build_incidence(benchmark::State& state) {
  const auto x = random_profile(static_cast<int>(state.range(0)), 11u);
  const auto dec = sdad::detail::rainflow_count(x);
  for (auto _ : state) {
    auto m = sdad::detail::build_incidence(x, dec);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(bm_build_incidence)->Arg(25)->Arg(49);

void bm_polytope_project(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  sdad::DispatchProblem prob = sdad::assemble_problem(
      sdad::DispatchConfig{}, sdad::synthetic_demand({.horizon = horizon}));
  const auto polytope = prob.soc_polytope(true);
  const auto y = random_profile(horizon + 1, 13u);
  for (auto _ : state) {
    auto x = polytope.project(y);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(bm_polytope_project)->Arg(24)->Arg(48);

void bm_solve_sdad(benchmark::State& state) {
  sdad::DispatchProblem prob = sdad::assemble_problem(
      sdad::DispatchConfig{}, sdad::synthetic_demand({.horizon = 24}));
  for (auto _ : state) {
    auto sol = sdad::solve_sdad(prob);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(bm_solve_sdad)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
