#pragma once

#include "sdad/rainflow.hpp"
#include "sdad/soc_profile.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace sdad {

/* Node-edge incidence matrix of the half-cycle graph.
 *
 * Rows are time nodes 0..T, columns are half-cycles.  Column i carries +1 at
 * the higher-SoC node and -1 at the lower-SoC node of edge i, so column_i^T x
 * is that half-cycle's depth on the generating profile.  Columns past the edge
 * list are identically zero; there are always exactly T columns.
 *
 * Storage is the edge list itself; dense() materializes on demand.
 */
class IncidenceMatrix {
 public:
  IncidenceMatrix(int num_nodes, int num_cols);

  void add_edge(int high, int low);
  void add_edge(std::pair<int, int> e) { add_edge(e.first, e.second); }

  int rows() const { return num_nodes_; }
  int cols() const { return num_cols_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  Eigen::MatrixXd dense() const;
  // M^T x: per-column signed depth, length cols().
  Eigen::VectorXd transpose_times(const Eigen::VectorXd& x) const;
  // M v for v of length cols().
  Eigen::VectorXd times(const Eigen::VectorXd& v) const;
  // Row sums (M applied to the all-ones column vector).
  Eigen::VectorXd row_sums() const;

  bool operator==(const IncidenceMatrix& o) const {
    return num_nodes_ == o.num_nodes_ && num_cols_ == o.num_cols_ && edges_ == o.edges_;
  }

 private:
  int num_nodes_;
  int num_cols_;
  std::vector<std::pair<int, int>> edges_;
};

// Assembles the incidence matrix from a profile and its decomposition: each
// full cycle contributes its column twice, each residual pair once.
IncidenceMatrix build_incidence(const SocProfile& x, const CycleDecomposition& dec);

// M^T x; equals the rainflow depth vector when M was built from x.
Eigen::VectorXd depths_from_incidence(const IncidenceMatrix& M, const SocProfile& x);

/* Charging/discharging split of the half-cycle graph.
 *
 * Each full cycle sends one column copy to each side; a residual edge is
 * charging when its higher-SoC node is the later one.  Columns on each side
 * are ordered by decreasing depth (stable), then zero-padded to T.
 */
struct ChargeDischargeSplit {
  IncidenceMatrix charging;
  IncidenceMatrix discharging;
  Eigen::VectorXd charging_depths;
  Eigen::VectorXd discharging_depths;
};

ChargeDischargeSplit split_charge_discharge(const IncidenceMatrix& M, const SocProfile& x);

struct RankReport {
  int rank = 0;          // rank of M
  int stacked_rank = 0;  // rank of [M M^T over the terminal and initial node selectors]
  // Bracketing min(rank+1, T+1) <= stacked_rank <= min(rank+2, T+1).
  bool bounds_ok = false;
  // Tighter identity observed on every matrix this counting produces.
  bool stacked_is_rank_plus_one = false;
};

// Numerical ranks via SVD; singular values below 1e-9 of the largest count as zero.
RankReport rank_analysis(const IncidenceMatrix& M);

/* Minimum decision margin of the counting algorithm on x.
 *
 * Minimum over all step magnitudes, every comparison margin examined during
 * full-cycle extraction, and the residual half-cycle depths.  Zero means some
 * comparison is exactly tied; perturbing a single step then changes the edge
 * list, while a margin of s leaves the edge list invariant for any single-step
 * perturbation below s/2.
 */
double extraction_slack(const SocProfile& x);

bool is_boundary_profile(const SocProfile& x, double tol = 1e-9);

namespace detail {
double extraction_slack(const Eigen::VectorXd& x);
// Unvalidated core of build_incidence; x only supplies the node count.
IncidenceMatrix build_incidence(const Eigen::VectorXd& x, const CycleDecomposition& dec);
}

// Rows = nodes, one column per matrix column, entries -1/0/+1.
void write_incidence_csv(const IncidenceMatrix& M, std::ostream& out);
void write_incidence_csv(const IncidenceMatrix& M, const std::filesystem::path& path);

}  // namespace sdad
