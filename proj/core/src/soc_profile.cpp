#include "sdad/soc_profile.hpp"

#include "sdad/errors.hpp"
#include "sdad/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace sdad {

namespace {

// Slack accepted before an entry is rejected; accepted entries are clamped
// into [0,1] so downstream code can rely on the exact box.
constexpr double kBoxSlack = 1e-9;

}  // namespace

SocProfile::SocProfile(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw InvalidProfileError("SoC profile needs at least 2 nodes, got " +
                              std::to_string(values_.size()));
  }
  for (Eigen::Index t = 0; t < values_.size(); ++t) {
    const double v = values_[t];
    if (!std::isfinite(v)) {
      throw InvalidProfileError("SoC profile entry " + std::to_string(t) + " is not finite");
    }
    if (v < -kBoxSlack || v > 1.0 + kBoxSlack) {
      throw InvalidProfileError("SoC profile entry " + std::to_string(t) + " = " +
                                format_double(v) + " outside [0,1]");
    }
    values_[t] = std::min(1.0, std::max(0.0, v));
  }
}

SocProfile SocProfile::from_vector(const std::vector<double>& v) {
  return SocProfile(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

bool SocProfile::returns_to_initial(double tol) const {
  return std::abs(values_[0] - values_[values_.size() - 1]) <= tol;
}

SocProfile load_soc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open SoC file " + path.string());
  std::string line;
  long row = 0;
  if (!std::getline(in, line)) throw IngestError("empty SoC file " + path.string(), 1);
  ++row;
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "t,soc") throw IngestError("expected header 't,soc' in " + path.string(), row);

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string t_field, soc_field;
    if (!std::getline(ss, t_field, ',') || !std::getline(ss, soc_field)) {
      throw IngestError("malformed row '" + line + "'", row);
    }
    long t = 0;
    auto tr = std::from_chars(t_field.data(), t_field.data() + t_field.size(), t);
    if (tr.ec != std::errc{} || tr.ptr != t_field.data() + t_field.size()) {
      throw IngestError("bad time index '" + t_field + "'", row);
    }
    if (t != static_cast<long>(values.size())) {
      throw IngestError("time index " + std::to_string(t) + " not contiguous, expected " +
                        std::to_string(values.size()), row);
    }
    double soc = 0.0;
    auto sr = std::from_chars(soc_field.data(), soc_field.data() + soc_field.size(), soc);
    if (sr.ec != std::errc{} || sr.ptr != soc_field.data() + soc_field.size()) {
      throw IngestError("bad SoC value '" + soc_field + "'", row);
    }
    if (!(soc >= -1e-9 && soc <= 1.0 + 1e-9)) {
      throw IngestError("SoC value " + soc_field + " outside [0,1]", row);
    }
    values.push_back(soc);
  }
  if (values.size() < 2) throw IngestError("SoC file has fewer than 2 rows", row);
  return SocProfile::from_vector(values);
}

void save_soc_csv(const SocProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write SoC file " + path.string());
  out << "t,soc\n";
  for (Eigen::Index t = 0; t < profile.num_nodes(); ++t) {
    out << t << ',' << format_double(profile[t]) << '\n';
  }
}

}  // namespace sdad
