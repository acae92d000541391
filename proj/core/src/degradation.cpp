#include "sdad/degradation.hpp"

#include "sdad/cyclegraph.hpp"
#include "sdad/errors.hpp"
#include "sdad/rainflow.hpp"

#include <cmath>
#include <string>

namespace sdad {

void DegradationParams::validate() const {
  if (!(alpha_b > 0.0) || !std::isfinite(alpha_b)) throw ConfigError("alpha_b must be positive");
  if (!(beta_b > 1.0) || !std::isfinite(beta_b)) throw ConfigError("beta_b must exceed 1");
  if (!(capital_cost_per_kwh >= 0.0) || !std::isfinite(capital_cost_per_kwh)) {
    throw ConfigError("capital cost must be nonnegative");
  }
  if (!(capacity_mwh > 0.0) || !std::isfinite(capacity_mwh)) {
    throw ConfigError("capacity must be positive");
  }
}

double stress(double depth, const DegradationParams& p) {
  if (!(depth >= 0.0 && depth <= 1.0)) {
    throw DomainError("cycle depth " + std::to_string(depth) + " outside [0,1]");
  }
  return 0.5 * p.alpha_b * std::pow(depth, p.beta_b);
}

double cycling_cost_depths(const Eigen::VectorXd& depths, const DegradationParams& p) {
  double total_stress = 0.0;
  for (Eigen::Index i = 0; i < depths.size(); ++i) total_stress += stress(depths[i], p);
  return p.replacement_cost() * total_stress;
}

double cycling_cost_profile(const SocProfile& x, const DegradationParams& p) {
  return detail::cycling_cost(x.values(), p);
}

Eigen::VectorXd cycling_cost_subgradient(const SocProfile& x, const DegradationParams& p) {
  const CycleDecomposition dec = rainflow_count(x);
  const IncidenceMatrix M = build_incidence(x, dec);
  const Eigen::VectorXd d = M.transpose_times(x.values());
  Eigen::VectorXd h(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    h[i] = d[i] > 0.0 ? std::pow(d[i], p.beta_b - 1.0) : 0.0;
  }
  const double coeff = 0.5 * p.replacement_cost() * p.alpha_b * p.beta_b;
  return coeff * M.times(h);
}

double naive_enumeration_cost(const SocProfile& x, const DegradationParams& p) {
  const std::vector<int> S = find_switching_times(x);
  const auto& v = x.values();
  double total_stress = 0.0;
  for (size_t j = 1; j < S.size(); ++j) {
    total_stress += stress(std::abs(v[S[j]] - v[S[j - 1]]), p);
  }
  return p.replacement_cost() * total_stress;
}

namespace detail {

double cycling_cost(const Eigen::VectorXd& x, const DegradationParams& p) {
  const CycleDecomposition dec = rainflow_count(x);
  double total_stress = 0.0;
  for (Eigen::Index i = 0; i < dec.depths.size(); ++i) {
    const double d = dec.depths[i];
    if (d > 0.0) total_stress += 0.5 * p.alpha_b * std::pow(d, p.beta_b);
  }
  return p.replacement_cost() * total_stress;
}

}  // namespace detail

}  // namespace sdad
