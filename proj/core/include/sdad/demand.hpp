#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace sdad {

// CSV with header "t,demand_mw", rows t = 0..T-1 in order.
Eigen::VectorXd load_demand_csv(const std::filesystem::path& path);
void save_demand_csv(const Eigen::VectorXd& demand, const std::filesystem::path& path);

/* Single-peak daily load shape: base + amplitude * cos(2 pi (t - peak) / T).
 *
 * The peak hour carries base + amplitude exactly; the shape stays nonnegative
 * only when amplitude <= base, which validation enforces.
 */
struct SyntheticDemandSpec {
  double base = 1500.0;       // MW
  double amplitude = 500.0;   // MW
  int horizon = 24;           // slots
  double peak_hour = 18.0;
};

Eigen::VectorXd synthetic_demand(const SyntheticDemandSpec& spec);

}  // namespace sdad
