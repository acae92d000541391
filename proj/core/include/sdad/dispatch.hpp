#pragma once

#include "sdad/degradation.hpp"
#include "sdad/projection.hpp"
#include "sdad/soc_profile.hpp"

#include <Eigen/Core>

#include <optional>
#include <string_view>
#include <vector>

namespace sdad {

enum class Strategy {
  Sdad,       // co-optimizes generation and cycling cost
  Gcd,        // generation cost only; cycling cost tallied after the fact
  Gd,         // no storage: generation follows demand
  BruteForce  // grid-search reference, test use only
};

std::string_view to_string(Strategy s);

/* One generator and one storage unit serving an inelastic hourly demand.
 *
 * Power variables are in MW with one-hour slots, energies in MWh, money in
 * currency units.  The SoC trajectory x is the decision variable; storage
 * power and generation follow as u = E * diff(x), g = demand + u.
 */
struct DispatchProblem {
  Eigen::VectorXd demand;  // MW, one entry per slot
  double alpha_g = 0.1;    // quadratic generation cost, $/MW^2 per slot
  double beta_g = 20.0;    // linear generation cost, $/MWh
  double g_min = 0.0;
  double g_max = 0.0;
  DegradationParams degradation;
  double u_min = 0.0;  // most negative discharge power, <= 0
  double u_max = 0.0;  // charge power cap, >= 0
  double initial_soc = 0.5;

  Eigen::Index horizon() const { return demand.size(); }

  // Feasible SoC set; with_generator_limits folds g_min/g_max into the step
  // bounds (the dispatch feasible set), without gives the storage-only set.
  ChainPolytope soc_polytope(bool with_generator_limits) const;

  void validate() const;
};

struct DispatchConfig {
  double alpha_g = 0.1;
  double beta_g = 20.0;
  double g_min = 0.0;
  std::optional<double> g_max;  // default: peak demand
  double alpha_b = 5.24e-4;
  double beta_b = 2.03;
  double capital_cost_per_kwh = 200.0;
  double capacity_mwh = 500.0;
  std::optional<double> u_min;  // default: -capacity/4
  std::optional<double> u_max;  // default: +capacity/4
  double initial_soc = 0.5;
};

DispatchProblem assemble_problem(const DispatchConfig& config, const Eigen::VectorXd& demand);

struct SolverOptions {
  double inner_tol = 1e-9;       // gradient-mapping tolerance, relative to price scale
  double outer_rel_tol = 1e-8;   // relative objective decrease treated as converged
  int max_outer = 1000;
  long max_inner = 100000;
  double feasibility_tol = 1e-9;
};

struct DispatchSolution {
  Strategy strategy = Strategy::Sdad;
  Eigen::VectorXd generation;     // g, MW
  Eigen::VectorXd storage_power;  // u, MW, positive = charging
  SocProfile soc{Eigen::VectorXd::Zero(2)};  // x, T+1 nodes
  Eigen::VectorXd lambda;         // marginal price per slot, $/MWh

  double generation_cost = 0.0;
  double cycling_cost = 0.0;  // for Gcd this is the hidden, untallied wear
  double total_cost = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  long inner_iterations = 0;
  std::vector<double> objective_trace;  // objective after each outer pass
};

// Euclidean projection of a SoC vector onto the dispatch feasible set.
SocProfile feasible_project(const Eigen::VectorXd& y, const DispatchProblem& prob);

DispatchSolution solve_sdad(const DispatchProblem& prob, const SolverOptions& opts = {});
DispatchSolution solve_gcd(const DispatchProblem& prob, const SolverOptions& opts = {});
DispatchSolution solve_gd(const DispatchProblem& prob);

// Exhaustive grid search over storage schedules; refuses horizons above 4.
DispatchSolution brute_force_dispatch(const DispatchProblem& prob, double grid_step);

/* First-order optimality report.
 *
 * Multipliers are reconstructed from the solution's active sets: prices from
 * generator stationarity on interior slots, the SoC-balance multiplier chain
 * from node stationarity, remaining prices from storage stationarity.  Slots
 * whose price no equation pins down are listed as degenerate.  Stationarity
 * blocks are normalized by the price scale (and capacity for the SoC block),
 * so residuals are comparable across instances.
 */
struct KktReport {
  double max_residual = 0.0;
  double stationarity_generator = 0.0;
  double stationarity_storage_power = 0.0;
  double stationarity_soc = 0.0;
  double dual_infeasibility = 0.0;
  double complementary_slackness = 0.0;
  double primal_infeasibility = 0.0;

  Eigen::VectorXd lambda;           // $/MWh per slot
  Eigen::VectorXd theta;            // SoC balance multiplier per slot
  Eigen::VectorXd gamma_upper, gamma_lower;  // generator capacity
  Eigen::VectorXd nu_upper, nu_lower;        // storage power
  Eigen::VectorXd mu_upper, mu_lower;        // SoC box, per node
  double omega_start = 0.0, omega_end = 0.0;  // pinned endpoint nodes
  std::vector<int> degenerate_slots;
};

KktReport kkt_residual(const DispatchSolution& sol, const DispatchProblem& prob);

namespace detail {

// Shared solver core: minimize sum_t q2_t u_t^2 + q1_t u_t + c0
// + cs_weight * cycling cost, with u = energy * diff(x), over the polytope.
struct CoreProblem {
  ChainPolytope polytope;
  Eigen::VectorXd q2, q1;
  double c0 = 0.0;
  double energy = 0.0;
  DegradationParams degradation;
  double cs_weight = 0.0;
};

struct CoreResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  long inner_iterations = 0;
  std::vector<double> objective_trace;
};

CoreResult solve_core(const CoreProblem& P, const SolverOptions& opts,
                      const Eigen::VectorXd* start = nullptr);

}  // namespace detail

}  // namespace sdad
