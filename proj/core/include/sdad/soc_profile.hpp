#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace sdad {

/* Normalized state-of-charge trajectory over T+1 time nodes.
 *
 * values()[t] is the SoC at node t, a fraction of usable capacity, so every
 * entry lies in [0,1].  Node 0 is the state before the first dispatch slot and
 * node T the state after the last one.  Whether the trajectory must return to
 * its initial level (values[0] == values[T]) depends on context: the dispatch
 * feasible set enforces it, cycle counting does not require it.
 */
class SocProfile {
 public:
  explicit SocProfile(Eigen::VectorXd values);
  static SocProfile from_vector(const std::vector<double>& v);

  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Eigen::Index t) const { return values_[t]; }
  Eigen::Index num_nodes() const { return values_.size(); }
  Eigen::Index num_steps() const { return values_.size() - 1; }
  double initial_soc() const { return values_[0]; }
  bool returns_to_initial(double tol = 1e-12) const;

 private:
  Eigen::VectorXd values_;
};

// CSV with header "t,soc", rows t = 0..T in order.
SocProfile load_soc_csv(const std::filesystem::path& path);
void save_soc_csv(const SocProfile& profile, const std::filesystem::path& path);

}  // namespace sdad
