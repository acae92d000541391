#include "sdad/market.hpp"

#include "sdad/cyclegraph.hpp"
#include "sdad/degradation.hpp"
#include "sdad/errors.hpp"
#include "sdad/rainflow.hpp"

#include <algorithm>
#include <cmath>

namespace sdad {

namespace {

double generation_cost(const Eigen::VectorXd& g, const DispatchProblem& prob) {
  double v = 0.0;
  for (Eigen::Index t = 0; t < g.size(); ++t) {
    v += prob.alpha_g * g[t] * g[t] + prob.beta_g * g[t];
  }
  return v;
}

}  // namespace

Eigen::VectorXd extract_prices(const DispatchSolution& sol, const DispatchProblem& prob) {
  if (!sol.converged) throw SolverError("prices require a converged dispatch");
  return kkt_residual(sol, prob).lambda;
}

Eigen::VectorXd generator_best_response(const Eigen::VectorXd& prices,
                                        const DispatchProblem& prob) {
  prob.validate();
  if (prices.size() != prob.horizon()) {
    throw ConfigError("price vector length does not match the horizon");
  }
  Eigen::VectorXd g(prices.size());
  for (Eigen::Index t = 0; t < prices.size(); ++t) {
    g[t] = std::clamp((prices[t] - prob.beta_g) / (2.0 * prob.alpha_g), prob.g_min, prob.g_max);
  }
  return g;
}

StorageResponse storage_best_response(const Eigen::VectorXd& prices, const DispatchProblem& prob,
                                      const SolverOptions& opts, const Eigen::VectorXd* start) {
  prob.validate();
  const Eigen::Index T = prob.horizon();
  if (prices.size() != T) throw ConfigError("price vector length does not match the horizon");
  if (!prices.allFinite()) throw ConfigError("prices must be finite");

  detail::CoreProblem P{prob.soc_polytope(false),
                        Eigen::VectorXd::Zero(T),
                        prices,
                        0.0,
                        prob.degradation.capacity_mwh,
                        prob.degradation,
                        1.0};
  detail::CoreResult res = detail::solve_core(P, opts, start);

  StorageResponse r;
  r.soc = SocProfile(std::move(res.x));
  r.storage_power = Eigen::VectorXd(T);
  const auto& x = r.soc.values();
  const double E = prob.degradation.capacity_mwh;
  for (Eigen::Index t = 0; t < T; ++t) r.storage_power[t] = E * (x[t + 1] - x[t]);
  r.wear_cost = cycling_cost_profile(r.soc, prob.degradation);
  r.profit = -prices.dot(r.storage_power) - r.wear_cost;
  r.converged = res.converged;
  return r;
}

IncentiveReport verify_incentive_compatibility(const DispatchSolution& sol,
                                               const DispatchProblem& prob,
                                               const SolverOptions& opts) {
  const Eigen::VectorXd p = extract_prices(sol, prob);
  IncentiveReport rep;

  rep.generator_profit = p.dot(sol.generation) - generation_cost(sol.generation, prob);
  const Eigen::VectorXd gbr = generator_best_response(p, prob);
  rep.generator_best_profit = p.dot(gbr) - generation_cost(gbr, prob);
  rep.generator_gap = (rep.generator_best_profit - rep.generator_profit) /
                      std::max(1.0, std::abs(rep.generator_best_profit));

  rep.storage_profit = -p.dot(sol.storage_power) - sol.cycling_cost;
  // The response problem is convex, so one certified solve pins the optimum;
  // a flat restart is consulted only when the warm run fails to certify.
  const Eigen::VectorXd& warm = sol.soc.values();
  StorageResponse sbr = storage_best_response(p, prob, opts, &warm);
  if (!sbr.converged) {
    StorageResponse from_flat = storage_best_response(p, prob, opts, nullptr);
    if (from_flat.profit >= sbr.profit) sbr = std::move(from_flat);
  }
  rep.storage_best_profit = sbr.profit;
  rep.storage_gap = (rep.storage_best_profit - rep.storage_profit) /
                    std::max(1.0, std::abs(rep.storage_best_profit));

  rep.consumer_payment = p.dot(prob.demand);
  rep.accounting_residual =
      rep.consumer_payment - rep.generator_profit - rep.storage_profit - sol.total_cost;

  const double money_scale = std::max(1.0, std::abs(rep.consumer_payment));
  rep.pass = rep.generator_gap <= kGeneratorGapTol && rep.storage_gap <= kStorageGapTol &&
             std::abs(rep.accounting_residual) <= 1e-9 * money_scale;
  return rep;
}

UniquenessCertificate uniqueness_certificate(const SocProfile& x, const DispatchProblem& prob,
                                             double tol) {
  prob.validate();
  if (x.num_nodes() != prob.horizon() + 1) {
    throw ConfigError("profile length does not match the horizon");
  }
  const int T = static_cast<int>(x.num_steps());

  UniquenessCertificate cert;
  cert.horizon = T;
  const CycleDecomposition dec = rainflow_count(x);
  const IncidenceMatrix M = build_incidence(x, dec);
  const RankReport rk = rank_analysis(M);
  cert.rank = rk.rank;
  cert.stacked_rank = rk.stacked_rank;

  if (std::abs(prob.degradation.beta_b - 2.0) > 1e-12) {
    cert.reason = "wear exponent is not quadratic";
    return cert;
  }
  if (is_boundary_profile(x, tol)) {
    cert.reason = "profile sits on a counting boundary";
    return cert;
  }
  const auto& v = x.values();
  for (Eigen::Index j = 1; j < x.num_nodes() - 1; ++j) {
    if (v[j] <= tol || v[j] >= 1.0 - tol) {
      cert.reason = "SoC box is active";
      return cert;
    }
  }
  const double E = prob.degradation.capacity_mwh;
  const double margin = 1e-9 * std::max({1.0, std::abs(prob.u_min), std::abs(prob.u_max)});
  for (Eigen::Index t = 0; t < prob.horizon(); ++t) {
    const double u = E * (v[t + 1] - v[t]);
    if (u <= prob.u_min + margin || u >= prob.u_max - margin) {
      cert.reason = "storage power bound is active";
      return cert;
    }
  }

  cert.applicable = true;
  cert.unique = cert.rank == T;
  if (!cert.unique) cert.reason = "incidence matrix is rank deficient";
  return cert;
}

}  // namespace sdad
