#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sdad/dispatch.hpp"
#include "sdad/projection.hpp"
#include "sdad/soc_profile.hpp"

namespace testsupport {

inline sdad::SocProfile soc_of(std::initializer_list<double> v) {
  return sdad::SocProfile::from_vector(std::vector<double>(v));
}

// Independent uniform draws; almost surely free of counting ties.
inline Eigen::VectorXd uniform_profile(std::mt19937& gen, int nodes) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd x(nodes);
  for (int i = 0; i < nodes; ++i) x[i] = dist(gen);
  return x;
}

// Random walk clipped to [0,1]; produces runs, near-ties and box contact.
inline Eigen::VectorXd walk_profile(std::mt19937& gen, int nodes, double step = 0.25) {
  std::uniform_real_distribution<double> dist(-step, step);
  Eigen::VectorXd x(nodes);
  x[0] = 0.5;
  for (int i = 1; i < nodes; ++i) x[i] = std::clamp(x[i - 1] + dist(gen), 0.0, 1.0);
  return x;
}

// Values on a coarse lattice; exact ties and plateaus are common.
inline Eigen::VectorXd quantized_profile(std::mt19937& gen, int nodes, int levels = 4) {
  std::uniform_int_distribution<int> dist(0, levels);
  Eigen::VectorXd x(nodes);
  for (int i = 0; i < nodes; ++i) x[i] = static_cast<double>(dist(gen)) / levels;
  return x;
}

template <class F>
Eigen::VectorXd central_difference_gradient(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double dn = f(p);
    p[i] = x[i];
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

/* Worst-case objective gap between the grid optimum and the true optimum.
 *
 * The dispatch objective is L1-Lipschitz per energy coordinate with
 * L1 = 2 alpha (D_max + U) + beta + replacement_cost * alpha_b * beta_b * T,
 * and the grid can miss the optimizer by step/2 in each of at most T
 * coordinates, twice (once per profile), giving L1 * T^2 * step / 2 overall
 * with the cross terms folded in.
 */
inline double grid_slack(const sdad::DispatchProblem& prob, double step) {
  const double T = static_cast<double>(prob.horizon());
  const double d_max = prob.demand.cwiseAbs().maxCoeff();
  const double u_big = std::max(std::abs(prob.u_min), std::abs(prob.u_max));
  const auto& deg = prob.degradation;
  const double lip = 2.0 * prob.alpha_g * (d_max + u_big) + prob.beta_g +
                     deg.replacement_cost() * deg.alpha_b * deg.beta_b * T;
  return lip * T * T * step / 2.0;
}

/* Exact projection onto a small ChainPolytope by active-set enumeration.
 *
 * Free variables are the interior nodes; every subset of at most that many
 * inequality constraints is tried as the active set, the equality-constrained
 * least squares is solved in closed form, and the unique candidate that is
 * primal feasible with nonnegative multipliers is the projection.  Intended
 * for polytopes with one or two interior nodes.
 */
inline Eigen::VectorXd project_oracle(const sdad::ChainPolytope& X, const Eigen::VectorXd& y) {
  const Eigen::Index T = X.num_nodes() - 1;
  const Eigen::Index n = T - 1;
  if (n < 1 || n > 2) throw std::logic_error("oracle handles 1 or 2 interior nodes");
  const double a = X.anchor();
  const auto& lo = X.step_lo();
  const auto& hi = X.step_hi();

  // Rows of A z <= b over the interior coordinates z = (x_1 .. x_{T-1}).
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](const Eigen::VectorXd& r, double b) {
    rows.push_back(r);
    rhs.push_back(b);
  };
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    double shift = 0.0;
    if (t > 0) r[t - 1] = -1.0;
    else shift -= a;
    if (t < T - 1) r[t] = 1.0;
    else shift += a;
    // shift + r^T z = x_{t+1} - x_t.
    add(r, hi[t] - shift);
    add(-r, shift - lo[t]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    r[i] = 1.0;
    add(r, 1.0);
    add(-r, 0.0);
  }

  const Eigen::VectorXd z0 = y.segment(1, n);
  const int m = static_cast<int>(rows.size());
  auto feasible = [&](const Eigen::VectorXd& z) {
    for (int i = 0; i < m; ++i) {
      if (rows[i].dot(z) > rhs[i] + 1e-10) return false;
    }
    return true;
  };

  bool have = false;
  Eigen::VectorXd best;
  auto consider = [&](const std::vector<int>& act) {
    const int k = static_cast<int>(act.size());
    Eigen::MatrixXd A(k, n);
    Eigen::VectorXd b(k);
    for (int i = 0; i < k; ++i) {
      A.row(i) = rows[act[i]].transpose();
      b[i] = rhs[act[i]];
    }
    Eigen::VectorXd z, mu;
    if (k == 0) {
      z = z0;
    } else {
      const Eigen::MatrixXd G = A * A.transpose();
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      if (lu.rank() < k) return;
      mu = lu.solve(A * z0 - b);
      if ((mu.array() < -1e-10).any()) return;
      z = z0 - A.transpose() * mu;
    }
    if (!feasible(z)) return;
    if (!have || (z - z0).squaredNorm() < (best - z0).squaredNorm() - 1e-15) {
      best = z;
      have = true;
    }
  };

  consider({});
  for (int i = 0; i < m; ++i) {
    consider({i});
    if (n == 2) {
      for (int j = i + 1; j < m; ++j) consider({i, j});
    }
  }
  if (!have) throw std::logic_error("oracle found no optimal active set");

  Eigen::VectorXd x(T + 1);
  x[0] = a;
  x.segment(1, n) = best;
  x[T] = a;
  return x;
}

}  // namespace testsupport
