#pragma once

#include "sdad/soc_profile.hpp"

#include <array>
#include <utility>
#include <vector>

namespace sdad {

/* Half-cycle depth decomposition of a SoC profile.
 *
 * depths has one slot per dispatch step (length T) and is zero-padded past the
 * counted entries.  Extracted full cycles occupy two consecutive equal entries
 * at the front, in extraction order; the remaining entries are the residual
 * half-cycles between surviving switching nodes, in chronological order.
 *
 * full_cycles stores one node pair per extracted cycle, ordered so that the
 * first node carries the weakly higher SoC.  residual is the ascending list of
 * switching nodes left after extraction; it always retains 0 and T.
 */
struct CycleDecomposition {
  Eigen::VectorXd depths;
  std::vector<std::pair<int, int>> full_cycles;
  std::vector<int> residual;

  bool operator==(const CycleDecomposition& o) const {
    return full_cycles == o.full_cycles && residual == o.residual &&
           depths.size() == o.depths.size() && (depths.array() == o.depths.array()).all();
  }
};

/* Nodes where the profile changes direction, plus both endpoints, ascending.
 *
 * A step of exactly zero inherits the direction of the last nonzero step, so a
 * plateau inside a monotone run creates no switching node and a flat profile
 * has none at all.
 */
std::vector<int> find_switching_times(const SocProfile& x);

// Absolute SoC swings (delta_{j-1}, delta_j, delta_{j+1}) between consecutive
// entries of the index list S around 1-based position j; valid for
// 2 <= j <= |S|-2.
std::array<double, 3> triple_diff(const SocProfile& x, const std::vector<int>& S, int j);

// Orders the node pair (S[j], S[j+1]) (1-based j) so the weakly higher SoC
// comes first; ties take the later node first.
std::pair<int, int> edge_direction(const SocProfile& x, const std::vector<int>& S, int j);

CycleDecomposition rainflow_count(const SocProfile& x);

namespace detail {

// Unvalidated variants shared with the solvers; x may be any finite vector.
std::vector<int> find_switching_times(const Eigen::VectorXd& x);
std::pair<int, int> edge_direction(const Eigen::VectorXd& x, const std::vector<int>& S, int j);
CycleDecomposition rainflow_count(const Eigen::VectorXd& x);

// Depth extraction only, no heap allocation: for hot loops on tiny profiles.
// Writes exactly n-1 entries to depths_out. scratch must hold n ints.
void rainflow_depths_small(const double* x, int n, double* depths_out, int* scratch);

}  // namespace detail

}  // namespace sdad
