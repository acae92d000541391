#pragma once

#include <Eigen/Core>

namespace sdad {

/* Feasible SoC trajectories as a polytope in R^{T+1}:
 *
 *   x_0 = x_T = anchor,   0 <= x_t <= 1,   step_lo_t <= x_t - x_{t-1} <= step_hi_t.
 *
 * Euclidean projection runs a primal active-set method on the least-distance
 * program: the endpoint pins stay in the working set permanently, box and
 * slab rows enter when they block a step and leave on a negative multiplier.
 * Every working-set subproblem is an equality-constrained projection solved
 * exactly, so the returned point is the projection up to roundoff rather
 * than an iterate of an infinite scheme cut off by a tolerance.
 */
class ChainPolytope {
 public:
  ChainPolytope(double anchor, Eigen::VectorXd step_lo, Eigen::VectorXd step_hi);

  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(step_lo_.size() + 1); }
  double anchor() const { return anchor_; }
  const Eigen::VectorXd& step_lo() const { return step_lo_; }
  const Eigen::VectorXd& step_hi() const { return step_hi_; }

  // Exact emptiness test by interval propagation along the chain.
  bool feasible_exists() const;

  // Largest violation across all defining constraints.
  double violation(const Eigen::VectorXd& x) const;

  Eigen::VectorXd project(const Eigen::VectorXd& y) const;

  // Flat trajectory at the anchor; feasible iff every slab admits a zero step.
  Eigen::VectorXd flat() const;

 private:
  double anchor_;
  Eigen::VectorXd step_lo_, step_hi_;
};

}  // namespace sdad
