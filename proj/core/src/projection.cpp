#include "sdad/projection.hpp"

#include "sdad/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sdad {

namespace {
// The working set gains or loses one row per iteration and the row count is
// linear in the horizon, so this cap is only reachable through cycling.
constexpr int kIterationsPerNode = 64;
constexpr double kMultiplierTol = 1e-10;
constexpr double kStationaryTol = 1e-13;
}  // namespace

ChainPolytope::ChainPolytope(double anchor, Eigen::VectorXd step_lo, Eigen::VectorXd step_hi)
    : anchor_(anchor), step_lo_(std::move(step_lo)), step_hi_(std::move(step_hi)) {
  if (step_lo_.size() != step_hi_.size() || step_lo_.size() < 1) {
    throw ConfigError("step bound vectors must match and be nonempty");
  }
  if (!(anchor_ >= 0.0 && anchor_ <= 1.0)) throw ConfigError("anchor SoC outside [0,1]");
  for (Eigen::Index t = 0; t < step_lo_.size(); ++t) {
    if (step_lo_[t] > step_hi_[t]) {
      throw ConfigError("empty step interval at slot " + std::to_string(t));
    }
  }
}

bool ChainPolytope::feasible_exists() const {
  const Eigen::Index T = step_lo_.size();
  double lo = anchor_, hi = anchor_;
  for (Eigen::Index t = 0; t < T; ++t) {
    lo = std::max(0.0, lo + step_lo_[t]);
    hi = std::min(1.0, hi + step_hi_[t]);
    if (lo > hi) return false;
  }
  return anchor_ >= lo && anchor_ <= hi;
}

double ChainPolytope::violation(const Eigen::VectorXd& x) const {
  const Eigen::Index T = step_lo_.size();
  double v = std::max(std::abs(x[0] - anchor_), std::abs(x[T] - anchor_));
  for (Eigen::Index t = 0; t <= T; ++t) {
    v = std::max(v, std::max(-x[t], x[t] - 1.0));
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const double s = x[t + 1] - x[t];
    v = std::max(v, std::max(step_lo_[t] - s, s - step_hi_[t]));
  }
  return std::max(v, 0.0);
}

Eigen::VectorXd ChainPolytope::flat() const {
  return Eigen::VectorXd::Constant(num_nodes(), anchor_);
}

Eigen::VectorXd ChainPolytope::project(const Eigen::VectorXd& y) const {
  const Eigen::Index T = step_lo_.size();
  const Eigen::Index n = T + 1;
  if (y.size() != n) throw StructuralError("vector length does not match polytope");
  if (!feasible_exists()) throw SolverError("projection target set is empty");
  if (violation(y) == 0.0) return y;

  // Inequality rows in a fixed order: step uppers, step lowers, box uppers
  // and box lowers on the interior nodes.  The endpoint pins are equalities
  // and sit outside this numbering.
  const Eigen::Index rows = 2 * T + 2 * (T - 1);
  auto row_dot = [&](Eigen::Index id, const Eigen::VectorXd& v) {
    if (id < T) return v[id + 1] - v[id];
    if (id < 2 * T) return v[id - T] - v[id - T + 1];
    if (id < 2 * T + (T - 1)) return v[id - 2 * T + 1];
    return -v[id - 2 * T - (T - 1) + 1];
  };
  auto row_rhs = [&](Eigen::Index id) {
    if (id < T) return step_hi_[id];
    if (id < 2 * T) return -step_lo_[id - T];
    if (id < 2 * T + (T - 1)) return 1.0;
    return 0.0;
  };
  auto stamp_row = [&](Eigen::Index id, Eigen::MatrixXd& A, Eigen::Index r) {
    if (id < T) {
      A(r, id) = -1.0;
      A(r, id + 1) = 1.0;
    } else if (id < 2 * T) {
      A(r, id - T) = 1.0;
      A(r, id - T + 1) = -1.0;
    } else if (id < 2 * T + (T - 1)) {
      A(r, id - 2 * T + 1) = 1.0;
    } else {
      A(r, id - 2 * T - (T - 1) + 1) = -1.0;
    }
  };

  // Feasible start: forward reachability intervals, then a backward sweep
  // that keeps each node inside its interval while tracking the target.
  Eigen::VectorXd reach_lo(n), reach_hi(n);
  reach_lo[0] = reach_hi[0] = anchor_;
  for (Eigen::Index t = 0; t < T; ++t) {
    reach_lo[t + 1] = std::max(0.0, reach_lo[t] + step_lo_[t]);
    reach_hi[t + 1] = std::min(1.0, reach_hi[t] + step_hi_[t]);
  }
  Eigen::VectorXd x(n);
  x[T] = anchor_;
  for (Eigen::Index t = T - 1; t > 0; --t) {
    const double lo = std::max(reach_lo[t], x[t + 1] - step_hi_[t]);
    const double hi = std::min(reach_hi[t], x[t + 1] - step_lo_[t]);
    x[t] = std::clamp(y[t], lo, hi);
  }
  x[0] = anchor_;

  std::vector<Eigen::Index> active;
  const int max_iter = kIterationsPerNode * static_cast<int>(n) + 256;
  bool done = false;
  for (int iter = 0; iter < max_iter && !done; ++iter) {
    const Eigen::Index m = static_cast<Eigen::Index>(active.size()) + 2;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd b(m);
    A(0, 0) = 1.0;
    b[0] = anchor_;
    A(1, n - 1) = 1.0;
    b[1] = anchor_;
    for (Eigen::Index k = 0; k < m - 2; ++k) {
      stamp_row(active[k], A, k + 2);
      b[k + 2] = row_rhs(active[k]);
    }

    // Projection onto the working-set equalities; the minimum-norm multiplier
    // solve keeps a rank-deficient working set (a rigid chain) well posed.
    const Eigen::VectorXd lambda =
        (A * A.transpose()).completeOrthogonalDecomposition().solve(A * y - b);
    const Eigen::VectorXd target = y - A.transpose() * lambda;
    const Eigen::VectorXd p = target - x;
    const double step_scale = p.lpNorm<Eigen::Infinity>();

    if (step_scale <= kStationaryTol * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      Eigen::Index worst = -1;
      double worst_mult = -kMultiplierTol;
      for (Eigen::Index k = 2; k < m; ++k) {
        if (lambda[k] < worst_mult) {
          worst_mult = lambda[k];
          worst = k - 2;
        }
      }
      if (worst < 0) {
        x = target;
        done = true;
      } else {
        active.erase(active.begin() + worst);
      }
      continue;
    }

    // Ratio test over the inactive rows; ties resolve to the lowest id so
    // the iteration is deterministic.
    const double dir_tol = 1e-12 * std::max(1.0, step_scale);
    double alpha = 1.0;
    Eigen::Index blocker = -1;
    for (Eigen::Index id = 0; id < rows; ++id) {
      if (std::binary_search(active.begin(), active.end(), id)) continue;
      const double d = row_dot(id, p);
      if (d <= dir_tol) continue;
      const double room = row_rhs(id) - row_dot(id, x);
      const double a = room <= 0.0 ? 0.0 : room / d;
      if (a < alpha) {
        alpha = a;
        blocker = id;
      }
    }
    x += alpha * p;
    if (blocker >= 0) active.insert(std::lower_bound(active.begin(), active.end(), blocker), blocker);
  }
  if (!done) throw SolverError("projection did not converge");

  // The multiplier solve can leave roundoff-scale slack on near-dependent
  // working sets.  The same backward reachability sweep that built the start
  // point restores every constraint at machine precision while moving the
  // point by no more than that slack.
  x[T] = anchor_;
  for (Eigen::Index t = T - 1; t > 0; --t) {
    const double lo = std::max(reach_lo[t], x[t + 1] - step_hi_[t]);
    const double hi = std::min(reach_hi[t], x[t + 1] - step_lo_[t]);
    x[t] = std::clamp(x[t], lo, hi);
  }
  x[0] = anchor_;
  if (violation(x) > 1e-9) throw SolverError("projection result infeasible");
  return x;
}

}  // namespace sdad
