#pragma once

#include "sdad/demand.hpp"
#include "sdad/dispatch.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdad::cli {

/* Everything a subcommand needs to run: problem parameters, demand source,
 * solver knobs, and output placement.  A JSON config file fills it first,
 * command-line flags override afterwards.
 */
struct RunConfig {
  DispatchConfig dispatch;
  SyntheticDemandSpec demand_shape;
  SolverOptions solver;
  std::optional<std::filesystem::path> demand_csv;
  std::filesystem::path out_dir = ".";
  bool plot = false;
};

RunConfig load_run_config(const std::filesystem::path& path);

struct SweepSpec {
  std::string parameter;  // "B" (capital cost) or "E" (capacity)
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

// Accepts "PARAM:LO:HI:COUNT", e.g. "B:25:300:12".
SweepSpec parse_sweep(const std::string& text);

// Demand CSV when configured, the synthetic shape otherwise.
Eigen::VectorXd resolve_demand(const RunConfig& cfg);

int run_rainflow(const RunConfig& cfg, const std::filesystem::path& soc_csv);
int run_dispatch(const RunConfig& cfg, const std::vector<Strategy>& strategies,
                 double grid_step);
int run_sweep(const RunConfig& cfg, const SweepSpec& sweep);
int run_verify(const RunConfig& cfg);

}  // namespace sdad::cli
