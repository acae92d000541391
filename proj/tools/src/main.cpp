#include "commands.hpp"

#include "sdad/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

// Flag values stay unset unless the user passes them, so a config file keeps
// authority over everything the command line leaves alone.
struct SharedFlags {
  std::optional<std::string> config;
  std::optional<std::string> demand;
  std::optional<std::string> out;
  bool plot = false;
  std::optional<int> horizon;
  std::optional<double> base, amplitude, peak_hour;
  std::optional<double> capacity, capital_cost, beta_b, initial_soc;
};

void add_shared(CLI::App* sub, SharedFlags& s, bool with_demand) {
  sub->add_option("--config", s.config, "JSON config file");
  sub->add_option("--out", s.out, "Output directory (default .)");
  sub->add_flag("--plot", s.plot, "Also write SVG charts");
  if (with_demand) {
    sub->add_option("--demand", s.demand, "Demand CSV (t,demand_mw); overrides the synthetic shape");
    sub->add_option("--horizon", s.horizon, "Synthetic demand slots");
    sub->add_option("--base", s.base, "Synthetic demand base, MW");
    sub->add_option("--amplitude", s.amplitude, "Synthetic demand amplitude, MW");
    sub->add_option("--peak-hour", s.peak_hour, "Synthetic demand peak hour");
    sub->add_option("--capacity", s.capacity, "Storage capacity, MWh");
    sub->add_option("--capital-cost", s.capital_cost, "Storage capital cost, $/kWh");
    sub->add_option("--beta-b", s.beta_b, "Wear exponent");
    sub->add_option("--initial-soc", s.initial_soc, "Anchor SoC in [0,1]");
  }
}

sdad::cli::RunConfig build_config(const SharedFlags& s) {
  sdad::cli::RunConfig cfg;
  if (s.config) cfg = sdad::cli::load_run_config(*s.config);
  if (s.demand) cfg.demand_csv = *s.demand;
  if (s.out) cfg.out_dir = *s.out;
  cfg.plot = cfg.plot || s.plot;
  if (s.horizon) cfg.demand_shape.horizon = *s.horizon;
  if (s.base) cfg.demand_shape.base = *s.base;
  if (s.amplitude) cfg.demand_shape.amplitude = *s.amplitude;
  if (s.peak_hour) cfg.demand_shape.peak_hour = *s.peak_hour;
  if (s.capacity) cfg.dispatch.capacity_mwh = *s.capacity;
  if (s.capital_cost) cfg.dispatch.capital_cost_per_kwh = *s.capital_cost;
  if (s.beta_b) cfg.dispatch.beta_b = *s.beta_b;
  if (s.initial_soc) cfg.dispatch.initial_soc = *s.initial_soc;
  return cfg;
}

std::vector<sdad::Strategy> parse_strategies(const std::string& text) {
  using sdad::Strategy;
  if (text == "all") return {Strategy::Sdad, Strategy::Gcd, Strategy::Gd};
  if (text == "sdad") return {Strategy::Sdad};
  if (text == "gcd") return {Strategy::Gcd};
  if (text == "gd") return {Strategy::Gd};
  if (text == "brute_force") return {Strategy::BruteForce};
  throw sdad::ConfigError("unknown strategy '" + text +
                          "', expected sdad|gcd|gd|brute_force|all");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycling-cost-aware economic dispatch for a generator-storage pair"};
  app.require_subcommand(1);

  SharedFlags s_rain, s_disp, s_sweep, s_verify;
  std::string soc_path;
  std::string strategy = "all";
  double grid_step = 0.0;
  std::string sweep_text;

  CLI::App* rain = app.add_subcommand("rainflow", "Count half-cycles of a SoC profile");
  rain->add_option("--soc", soc_path, "SoC profile CSV (t,soc)")->required();
  add_shared(rain, s_rain, false);

  CLI::App* disp = app.add_subcommand("dispatch", "Solve the dispatch over one horizon");
  add_shared(disp, s_disp, true);
  disp->add_option("--strategy", strategy, "sdad|gcd|gd|brute_force|all (default all)");
  disp->add_option("--grid-step", grid_step, "Brute-force grid step, MW");

  CLI::App* swp = app.add_subcommand("sweep", "Re-solve across a parameter range");
  add_shared(swp, s_sweep, true);
  swp->add_option("--sweep", sweep_text, "PARAM:LO:HI:COUNT, e.g. B:25:300:12")->required();

  CLI::App* ver = app.add_subcommand("verify", "Audit prices, incentives, and uniqueness");
  add_shared(ver, s_verify, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (rain->parsed()) return sdad::cli::run_rainflow(build_config(s_rain), soc_path);
    if (disp->parsed()) {
      return sdad::cli::run_dispatch(build_config(s_disp), parse_strategies(strategy), grid_step);
    }
    if (swp->parsed()) {
      return sdad::cli::run_sweep(build_config(s_sweep), sdad::cli::parse_sweep(sweep_text));
    }
    if (ver->parsed()) return sdad::cli::run_verify(build_config(s_verify));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
