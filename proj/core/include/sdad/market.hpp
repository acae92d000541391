#pragma once

#include "sdad/dispatch.hpp"
#include "sdad/soc_profile.hpp"

#include <Eigen/Core>

#include <string>

namespace sdad {

// Gap tolerances under which a dispatch counts as incentive compatible.
inline constexpr double kGeneratorGapTol = 1e-4;
inline constexpr double kStorageGapTol = 1e-3;

// Marginal prices of a converged dispatch; refuses unconverged solutions.
Eigen::VectorXd extract_prices(const DispatchSolution& sol, const DispatchProblem& prob);

// Profit-maximizing generation schedule against fixed prices.
Eigen::VectorXd generator_best_response(const Eigen::VectorXd& prices,
                                        const DispatchProblem& prob);

struct StorageResponse {
  Eigen::VectorXd storage_power;
  SocProfile soc{Eigen::VectorXd::Zero(2)};
  double profit = 0.0;  // arbitrage revenue minus wear
  double wear_cost = 0.0;
  bool converged = false;
};

// Profit-maximizing storage schedule against fixed prices over the
// storage-only feasible set; start seeds the solver when given.
StorageResponse storage_best_response(const Eigen::VectorXd& prices, const DispatchProblem& prob,
                                      const SolverOptions& opts = {},
                                      const Eigen::VectorXd* start = nullptr);

/* Self-interest audit of a dispatch at its own prices.
 *
 * Gaps are the relative profit each side leaves behind by following the
 * dispatch instead of its best response.  The accounting residual checks
 * that consumer payments split exactly into both profits plus total cost.
 */
struct IncentiveReport {
  double generator_gap = 0.0;
  double storage_gap = 0.0;
  double generator_profit = 0.0;
  double generator_best_profit = 0.0;
  double storage_profit = 0.0;
  double storage_best_profit = 0.0;
  double consumer_payment = 0.0;
  double accounting_residual = 0.0;
  bool pass = false;
};

IncentiveReport verify_incentive_compatibility(const DispatchSolution& sol,
                                               const DispatchProblem& prob,
                                               const SolverOptions& opts = {});

/* Sufficient condition for a unique storage best response.
 *
 * Applies when wear is quadratic, the profile is clear of counting ties, and
 * every inequality of the storage-only set is strictly slack; full column
 * rank of the incidence matrix then pins the whole trajectory, since its
 * transpose annihilates only uniform shifts and the anchor removes those.
 */
struct UniquenessCertificate {
  bool applicable = false;
  bool unique = false;
  int rank = 0;
  int stacked_rank = 0;
  int horizon = 0;
  std::string reason;  // empty when the certificate applies and holds
};

UniquenessCertificate uniqueness_certificate(const SocProfile& x, const DispatchProblem& prob,
                                             double tol = 1e-9);

}  // namespace sdad
