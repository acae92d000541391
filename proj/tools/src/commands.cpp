#include "commands.hpp"

#include "sdad/cyclegraph.hpp"
#include "sdad/degradation.hpp"
#include "sdad/errors.hpp"
#include "sdad/format.hpp"
#include "sdad/market.hpp"
#include "sdad/rainflow.hpp"
#include "sdad/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <utility>
#include <vector>

namespace sdad::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void expect_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key '" + item.key() + "' in " + where);
  }
}

double get_num(const ordered_json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) {
    throw ConfigError(std::string("config key '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

long get_int(const ordered_json& j, const char* key, long fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(std::string("config key '") + key + "' must be an integer");
  }
  return j.at(key).get<long>();
}

std::optional<double> get_opt(const ordered_json& j, const char* key,
                              std::optional<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) {
    throw ConfigError(std::string("config key '") + key + "' must be a number or null");
  }
  return j.at(key).get<double>();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  return out;
}

void write_solution_csv(const fs::path& path, const DispatchProblem& prob,
                        const DispatchSolution& sol) {
  std::ofstream out = open_out(path);
  out << "t,demand_mw,g_mw,u_mw,soc,lambda\n";
  for (Eigen::Index t = 0; t < prob.horizon(); ++t) {
    const double lam = t < sol.lambda.size() ? sol.lambda[t] : kNaN;
    out << t << ',' << format_double(prob.demand[t]) << ',' << format_double(sol.generation[t])
        << ',' << format_double(sol.storage_power[t]) << ',' << format_double(sol.soc[t + 1])
        << ',' << format_double(lam) << '\n';
  }
}

void write_summary_csv(const fs::path& path, const std::vector<DispatchSolution>& sols) {
  std::ofstream out = open_out(path);
  out << "strategy,generation_cost,cycling_cost,hidden_cycling_cost,total_cost,kkt_residual,"
         "converged\n";
  for (const auto& sol : sols) {
    // A cycling-blind dispatch still wears the cells; its wear shows up in
    // the hidden column and in the total.
    const bool blind = sol.strategy == Strategy::Gcd;
    const double tallied = blind ? 0.0 : sol.cycling_cost;
    const double hidden = blind ? sol.cycling_cost : 0.0;
    out << to_string(sol.strategy) << ',' << format_double(sol.generation_cost) << ','
        << format_double(tallied) << ',' << format_double(hidden) << ','
        << format_double(sol.total_cost) << ',' << format_double(sol.kkt_residual) << ','
        << (sol.converged ? "true" : "false") << '\n';
  }
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  expect_keys(j,
              {"alpha_g", "beta_g", "g_min", "g_max", "alpha_b", "beta_b",
               "capital_cost_per_kwh", "capacity_mwh", "u_min", "u_max", "initial_soc", "demand",
               "solver", "out_dir", "plot"},
              path.string());

  RunConfig cfg;
  cfg.dispatch.alpha_g = get_num(j, "alpha_g", cfg.dispatch.alpha_g);
  cfg.dispatch.beta_g = get_num(j, "beta_g", cfg.dispatch.beta_g);
  cfg.dispatch.g_min = get_num(j, "g_min", cfg.dispatch.g_min);
  cfg.dispatch.g_max = get_opt(j, "g_max", cfg.dispatch.g_max);
  cfg.dispatch.alpha_b = get_num(j, "alpha_b", cfg.dispatch.alpha_b);
  cfg.dispatch.beta_b = get_num(j, "beta_b", cfg.dispatch.beta_b);
  cfg.dispatch.capital_cost_per_kwh =
      get_num(j, "capital_cost_per_kwh", cfg.dispatch.capital_cost_per_kwh);
  cfg.dispatch.capacity_mwh = get_num(j, "capacity_mwh", cfg.dispatch.capacity_mwh);
  cfg.dispatch.u_min = get_opt(j, "u_min", cfg.dispatch.u_min);
  cfg.dispatch.u_max = get_opt(j, "u_max", cfg.dispatch.u_max);
  cfg.dispatch.initial_soc = get_num(j, "initial_soc", cfg.dispatch.initial_soc);

  if (j.contains("demand")) {
    const auto& d = j.at("demand");
    if (!d.is_object()) throw ConfigError("config key 'demand' must be an object");
    expect_keys(d, {"csv", "base", "amplitude", "horizon", "peak_hour"}, "demand");
    if (d.contains("csv") && !d.at("csv").is_null()) {
      if (!d.at("csv").is_string()) throw ConfigError("config key 'demand.csv' must be a string");
      cfg.demand_csv = fs::path(d.at("csv").get<std::string>());
    }
    cfg.demand_shape.base = get_num(d, "base", cfg.demand_shape.base);
    cfg.demand_shape.amplitude = get_num(d, "amplitude", cfg.demand_shape.amplitude);
    cfg.demand_shape.horizon = static_cast<int>(get_int(d, "horizon", cfg.demand_shape.horizon));
    cfg.demand_shape.peak_hour = get_num(d, "peak_hour", cfg.demand_shape.peak_hour);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (!s.is_object()) throw ConfigError("config key 'solver' must be an object");
    expect_keys(s, {"inner_tol", "outer_rel_tol", "max_outer", "max_inner", "feasibility_tol"},
                "solver");
    cfg.solver.inner_tol = get_num(s, "inner_tol", cfg.solver.inner_tol);
    cfg.solver.outer_rel_tol = get_num(s, "outer_rel_tol", cfg.solver.outer_rel_tol);
    cfg.solver.max_outer = static_cast<int>(get_int(s, "max_outer", cfg.solver.max_outer));
    cfg.solver.max_inner = get_int(s, "max_inner", cfg.solver.max_inner);
    cfg.solver.feasibility_tol = get_num(s, "feasibility_tol", cfg.solver.feasibility_tol);
  }
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) throw ConfigError("config key 'out_dir' must be a string");
    cfg.out_dir = fs::path(j.at("out_dir").get<std::string>());
  }
  if (j.contains("plot")) {
    if (!j.at("plot").is_boolean()) throw ConfigError("config key 'plot' must be a boolean");
    cfg.plot = j.at("plot").get<bool>();
  }
  return cfg;
}

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec spec;
  const auto fail = [&text]() {
    throw ConfigError("sweep spec '" + text + "' must look like PARAM:LO:HI:COUNT");
  };
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    const size_t colon = text.find(':', pos);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(pos));
      break;
    }
    parts.push_back(text.substr(pos, colon - pos));
    pos = colon + 1;
  }
  if (parts.size() != 4) fail();
  spec.parameter = parts[0];
  if (spec.parameter != "B" && spec.parameter != "E") {
    throw ConfigError("sweep parameter must be B (capital cost) or E (capacity), got '" +
                      spec.parameter + "'");
  }
  try {
    spec.lo = std::stod(parts[1]);
    spec.hi = std::stod(parts[2]);
    spec.count = std::stoi(parts[3]);
  } catch (const std::exception&) {
    fail();
  }
  if (!(spec.lo > 0.0) || !(spec.hi >= spec.lo)) {
    throw ConfigError("sweep range must be positive with LO <= HI");
  }
  if (spec.count < 1) throw ConfigError("sweep needs at least one point");
  return spec;
}

Eigen::VectorXd resolve_demand(const RunConfig& cfg) {
  if (cfg.demand_csv) return load_demand_csv(*cfg.demand_csv);
  return synthetic_demand(cfg.demand_shape);
}

int run_rainflow(const RunConfig& cfg, const fs::path& soc_csv) {
  const SocProfile x = load_soc_csv(soc_csv);
  const CycleDecomposition dec = rainflow_count(x);
  const IncidenceMatrix M = build_incidence(x, dec);
  const Eigen::VectorXd depths = depths_from_incidence(M, x);
  const RankReport rk = rank_analysis(M);

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out = open_out(cfg.out_dir / "cycles.csv");
    out << "index,depth,kind,start_t,end_t\n";
    const auto& edges = M.edges();
    const size_t full_cols = 2 * dec.full_cycles.size();
    for (size_t k = 0; k < edges.size(); ++k) {
      const auto& [a, b] = edges[k];
      out << k << ',' << format_double(depths[static_cast<Eigen::Index>(k)]) << ','
          << (k < full_cols ? "full" : "half") << ',' << std::min(a, b) << ',' << std::max(a, b)
          << '\n';
    }
  }
  write_incidence_csv(M, cfg.out_dir / "incidence.csv");
  if (cfg.plot) {
    SvgSeries series;
    series.label = "soc";
    series.y.assign(x.values().data(), x.values().data() + x.num_nodes());
    write_line_chart(cfg.out_dir / "soc.svg", "State of charge", "time node", "soc", {series});
  }

  std::cout << "nodes: " << x.num_nodes() << "\n"
            << "full cycles: " << dec.full_cycles.size() << "\n"
            << "residual half-cycles: " << (M.edge_count() - 2 * dec.full_cycles.size()) << "\n"
            << "boundary profile: " << (is_boundary_profile(x) ? "yes" : "no") << "\n"
            << "extraction slack: " << format_double(extraction_slack(x)) << "\n"
            << "incidence rank: " << rk.rank << " (stacked " << rk.stacked_rank << ")\n";
  return 0;
}

int run_dispatch(const RunConfig& cfg, const std::vector<Strategy>& strategies,
                 double grid_step) {
  if (strategies.empty()) throw ConfigError("no strategy selected");
  const Eigen::VectorXd D = resolve_demand(cfg);
  const DispatchProblem prob = assemble_problem(cfg.dispatch, D);

  fs::create_directories(cfg.out_dir);
  save_demand_csv(D, cfg.out_dir / "demand.csv");

  std::vector<DispatchSolution> sols;
  sols.reserve(strategies.size());
  for (Strategy st : strategies) {
    DispatchSolution sol;
    switch (st) {
      case Strategy::Sdad: sol = solve_sdad(prob, cfg.solver); break;
      case Strategy::Gcd: sol = solve_gcd(prob, cfg.solver); break;
      case Strategy::Gd: sol = solve_gd(prob); break;
      case Strategy::BruteForce: {
        const double step = grid_step > 0.0 ? grid_step : (prob.u_max - prob.u_min) / 40.0;
        sol = brute_force_dispatch(prob, step);
        break;
      }
    }
    write_solution_csv(cfg.out_dir / ("solution_" + std::string(to_string(st)) + ".csv"), prob,
                       sol);
    sols.push_back(std::move(sol));
  }
  write_summary_csv(cfg.out_dir / "summary.csv", sols);

  if (cfg.plot) {
    std::vector<SvgSeries> power;
    SvgSeries demand_series;
    demand_series.label = "demand";
    demand_series.y.assign(D.data(), D.data() + D.size());
    power.push_back(std::move(demand_series));
    for (const auto& sol : sols) {
      SvgSeries s;
      s.label = "g " + std::string(to_string(sol.strategy));
      s.y.assign(sol.generation.data(), sol.generation.data() + sol.generation.size());
      power.push_back(std::move(s));
    }
    write_line_chart(cfg.out_dir / "dispatch_power.svg", "Generation vs demand", "slot", "MW",
                     power);

    std::vector<SvgSeries> socs;
    for (const auto& sol : sols) {
      SvgSeries s;
      s.label = "soc " + std::string(to_string(sol.strategy));
      s.y.assign(sol.soc.values().data(), sol.soc.values().data() + sol.soc.num_nodes());
      socs.push_back(std::move(s));
    }
    write_line_chart(cfg.out_dir / "dispatch_soc.svg", "State of charge", "time node", "soc",
                     socs);
  }

  bool all_converged = true;
  for (const auto& sol : sols) {
    all_converged = all_converged && sol.converged;
    std::cout << to_string(sol.strategy) << ": total=" << format_double(sol.total_cost)
              << " generation=" << format_double(sol.generation_cost)
              << " cycling=" << format_double(sol.cycling_cost)
              << " kkt=" << format_double(sol.kkt_residual)
              << (sol.converged ? "" : " NOT CONVERGED") << "\n";
  }
  return all_converged ? 0 : 1;
}

namespace {

struct SweepRow {
  double value = 0.0;
  double sdad = kNaN;
  double gcd_total = kNaN;
  double gcd_hidden = kNaN;
  double gd = kNaN;
  bool ok = false;
  std::string error;
};

SweepRow eval_sweep_point(const RunConfig& cfg, const SweepSpec& sweep, const Eigen::VectorXd& D,
                          double value) {
  SweepRow row;
  row.value = value;
  try {
    DispatchConfig dc = cfg.dispatch;
    if (sweep.parameter == "B") {
      dc.capital_cost_per_kwh = value;
    } else {
      dc.capacity_mwh = value;
    }
    const DispatchProblem prob = assemble_problem(dc, D);
    const DispatchSolution s = solve_sdad(prob, cfg.solver);
    const DispatchSolution c = solve_gcd(prob, cfg.solver);
    const DispatchSolution g = solve_gd(prob);
    if (!s.converged || !c.converged) throw SolverError("dispatch did not converge");
    row.sdad = s.total_cost;
    row.gcd_total = c.total_cost;
    row.gcd_hidden = c.cycling_cost;
    row.gd = g.total_cost;
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

int run_sweep(const RunConfig& cfg, const SweepSpec& sweep) {
  const Eigen::VectorXd D = resolve_demand(cfg);

  std::vector<double> values(static_cast<size_t>(sweep.count));
  for (int i = 0; i < sweep.count; ++i) {
    values[static_cast<size_t>(i)] =
        sweep.count == 1 ? sweep.lo
                         : sweep.lo + (sweep.hi - sweep.lo) * i / (sweep.count - 1);
  }

  std::vector<std::future<SweepRow>> futures;
  futures.reserve(values.size());
  for (double v : values) {
    futures.push_back(std::async(std::launch::async, eval_sweep_point, std::cref(cfg),
                                 std::cref(sweep), std::cref(D), v));
  }
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (auto& f : futures) rows.push_back(f.get());

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out = open_out(cfg.out_dir / "sweep.csv");
    out << "sweep_value,cost_sdad,cost_gcd_total,cost_gcd_hidden,cost_gd\n";
    for (const auto& row : rows) {
      out << format_double(row.value) << ',' << format_double(row.sdad) << ','
          << format_double(row.gcd_total) << ',' << format_double(row.gcd_hidden) << ','
          << format_double(row.gd) << '\n';
    }
  }

  if (cfg.plot) {
    std::vector<SvgSeries> series(4);
    series[0].label = "sdad total";
    series[1].label = "gcd total";
    series[2].label = "gcd hidden wear";
    series[3].label = "gd total";
    for (const auto& row : rows) {
      for (auto& s : series) s.x.push_back(row.value);
      series[0].y.push_back(row.sdad);
      series[1].y.push_back(row.gcd_total);
      series[2].y.push_back(row.gcd_hidden);
      series[3].y.push_back(row.gd);
    }
    const std::string axis =
        sweep.parameter == "B" ? "capital cost, $/kWh" : "capacity, MWh";
    write_line_chart(cfg.out_dir / "sweep.svg", "Cost across the sweep", axis, "cost, $", series);
  }

  bool all_ok = true;
  for (const auto& row : rows) {
    if (!row.ok) {
      all_ok = false;
      std::cerr << "sweep point " << format_double(row.value) << " failed: " << row.error << "\n";
    }
  }
  std::cout << "sweep points: " << rows.size() << (all_ok ? "" : " (some failed)") << "\n";
  return all_ok ? 0 : 1;
}

int run_verify(const RunConfig& cfg) {
  const Eigen::VectorXd D = resolve_demand(cfg);
  const DispatchProblem prob = assemble_problem(cfg.dispatch, D);
  const DispatchSolution sol = solve_sdad(prob, cfg.solver);
  const KktReport kkt = kkt_residual(sol, prob);
  const IncentiveReport inc = verify_incentive_compatibility(sol, prob, cfg.solver);
  const UniquenessCertificate cert = uniqueness_certificate(sol.soc, prob);

  const bool pass = sol.converged && inc.pass && kkt.max_residual <= 1e-6;

  ordered_json rep;
  rep["strategy"] = std::string(to_string(sol.strategy));
  rep["horizon"] = static_cast<long>(prob.horizon());
  rep["converged"] = sol.converged;
  rep["kkt_residual"] = kkt.max_residual;
  rep["generator_gap"] = inc.generator_gap;
  rep["storage_gap"] = inc.storage_gap;
  rep["pass"] = pass;
  rep["lambda"] = std::vector<double>(sol.lambda.data(), sol.lambda.data() + sol.lambda.size());
  rep["certificate"] = ordered_json{{"rank", cert.rank},
                                    {"stacked_rank", cert.stacked_rank},
                                    {"T", cert.horizon},
                                    {"applicable", cert.applicable},
                                    {"unique", cert.unique},
                                    {"reason", cert.reason}};
  rep["details"] = ordered_json{
      {"generator_profit", inc.generator_profit},
      {"generator_best_profit", inc.generator_best_profit},
      {"storage_profit", inc.storage_profit},
      {"storage_best_profit", inc.storage_best_profit},
      {"consumer_payment", inc.consumer_payment},
      {"accounting_residual", inc.accounting_residual},
      {"total_cost", sol.total_cost},
      {"stationarity_generator", kkt.stationarity_generator},
      {"stationarity_storage_power", kkt.stationarity_storage_power},
      {"stationarity_soc", kkt.stationarity_soc},
      {"dual_infeasibility", kkt.dual_infeasibility},
      {"complementary_slackness", kkt.complementary_slackness},
      {"primal_infeasibility", kkt.primal_infeasibility},
      {"degenerate_slots", kkt.degenerate_slots}};

  const std::string text = rep.dump(2) + "\n";
  fs::create_directories(cfg.out_dir);
  std::ofstream out = open_out(cfg.out_dir / "verify.json");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::cout << text;
  return pass ? 0 : 1;
}

}  // namespace sdad::cli
