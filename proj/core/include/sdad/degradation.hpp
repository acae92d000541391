#pragma once

#include "sdad/soc_profile.hpp"

#include <Eigen/Core>

namespace sdad {

/* Storage wear model.
 *
 * A half-cycle of normalized depth d consumes stress (alpha_b/2) d^beta_b of
 * the cell's life; spending the whole replacement cost over unit life prices a
 * depth profile at replacement_cost() times its summed stress.  The capital
 * price is taken per kWh (the usual quote) while capacity is in MWh, hence the
 * factor 1000 in the replacement cost.
 */
struct DegradationParams {
  double alpha_b = 5.24e-4;
  double beta_b = 2.03;
  double capital_cost_per_kwh = 200.0;  // B
  double capacity_mwh = 500.0;          // E

  double replacement_cost() const { return 1000.0 * capital_cost_per_kwh * capacity_mwh; }
  void validate() const;
};

// Life fraction consumed by one half-cycle of depth in [0,1].
double stress(double depth, const DegradationParams& p);

double cycling_cost_depths(const Eigen::VectorXd& depths, const DegradationParams& p);

double cycling_cost_profile(const SocProfile& x, const DegradationParams& p);

// Gradient of the cycling cost with the cycle pattern frozen at x; a valid
// subgradient wherever the pattern is locally stable.
Eigen::VectorXd cycling_cost_subgradient(const SocProfile& x, const DegradationParams& p);

// Cost of pricing each monotone segment between switching nodes as its own
// half-cycle; never exceeds the counted cycling cost.
double naive_enumeration_cost(const SocProfile& x, const DegradationParams& p);

namespace detail {
double cycling_cost(const Eigen::VectorXd& x, const DegradationParams& p);
}

}  // namespace sdad
