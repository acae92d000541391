#include "sdad/demand.hpp"

#include "sdad/errors.hpp"
#include "sdad/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace sdad {

Eigen::VectorXd load_demand_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open demand file " + path.string());
  std::string line;
  long row = 0;
  if (!std::getline(in, line)) throw IngestError("empty demand file " + path.string(), 1);
  ++row;
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "t,demand_mw") {
    throw IngestError("expected header 't,demand_mw' in " + path.string(), row);
  }

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string t_field, d_field;
    if (!std::getline(ss, t_field, ',') || !std::getline(ss, d_field)) {
      throw IngestError("malformed row '" + line + "'", row);
    }
    long t = 0;
    auto tr = std::from_chars(t_field.data(), t_field.data() + t_field.size(), t);
    if (tr.ec != std::errc{} || tr.ptr != t_field.data() + t_field.size()) {
      throw IngestError("bad time index '" + t_field + "'", row);
    }
    if (t != static_cast<long>(values.size())) {
      throw IngestError("time index " + std::to_string(t) + " not contiguous, expected " +
                            std::to_string(values.size()),
                        row);
    }
    double d = 0.0;
    auto dr = std::from_chars(d_field.data(), d_field.data() + d_field.size(), d);
    if (dr.ec != std::errc{} || dr.ptr != d_field.data() + d_field.size()) {
      throw IngestError("bad demand value '" + d_field + "'", row);
    }
    if (!std::isfinite(d)) throw IngestError("demand value '" + d_field + "' is not finite", row);
    values.push_back(d);
  }
  if (values.empty()) throw IngestError("demand file has no rows", row);
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

void save_demand_csv(const Eigen::VectorXd& demand, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write demand file " + path.string());
  out << "t,demand_mw\n";
  for (Eigen::Index t = 0; t < demand.size(); ++t) {
    out << t << ',' << format_double(demand[t]) << '\n';
  }
}

Eigen::VectorXd synthetic_demand(const SyntheticDemandSpec& spec) {
  if (spec.horizon < 1) throw ConfigError("demand horizon must be at least 1 slot");
  if (!std::isfinite(spec.base) || !std::isfinite(spec.amplitude) ||
      !std::isfinite(spec.peak_hour)) {
    throw ConfigError("demand shape parameters must be finite");
  }
  if (spec.amplitude < 0.0) throw ConfigError("demand amplitude must be nonnegative");
  if (spec.amplitude > spec.base) {
    throw ConfigError("demand amplitude above base would drive demand negative");
  }
  Eigen::VectorXd d(spec.horizon);
  for (int t = 0; t < spec.horizon; ++t) {
    const double phase = 2.0 * std::numbers::pi * (t - spec.peak_hour) / spec.horizon;
    d[t] = spec.base + spec.amplitude * std::cos(phase);
  }
  return d;
}

}  // namespace sdad
