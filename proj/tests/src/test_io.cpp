#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "sdad/demand.hpp"
#include "sdad/errors.hpp"
#include "sdad/soc_profile.hpp"
#include "sdad/svg.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sdad_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("soc csv round trip is byte stable") {
  const auto x = testsupport::soc_of({0.1, 0.9, 0.4, 0.6, 0.3, 1.0});
  const auto p = scratch_file("roundtrip_soc.csv");
  sdad::save_soc_csv(x, p);
  CHECK(read_text(p) == "t,soc\n0,0.1\n1,0.9\n2,0.4\n3,0.6\n4,0.3\n5,1\n");

  const auto back = sdad::load_soc_csv(p);
  REQUIRE(back.num_nodes() == 6);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(back[i] == x[i]);

  sdad::save_soc_csv(back, p);
  CHECK(read_text(p) == "t,soc\n0,0.1\n1,0.9\n2,0.4\n3,0.6\n4,0.3\n5,1\n");
}

TEST_CASE("soc csv ingestion cites the offending row") {
  const auto p = scratch_file("bad_soc.csv");

  CHECK_THROWS_AS(sdad::load_soc_csv(scratch_file("missing.csv")), sdad::IngestError);

  write_text(p, "time,soc\n0,0.5\n1,0.6\n");
  CHECK_THROWS_AS(sdad::load_soc_csv(p), sdad::IngestError);

  write_text(p, "t,soc\n0,0.1\n1,0.2\n5,0.3\n");
  try {
    sdad::load_soc_csv(p);
    FAIL("expected a rejection");
  } catch (const sdad::IngestError& e) {
    CHECK(e.row() == 4);
    CHECK(std::string(e.what()).find("(row 4)") != std::string::npos);
  }

  write_text(p, "t,soc\n0,0.1\n1,1.5\n");
  CHECK_THROWS_AS(sdad::load_soc_csv(p), sdad::IngestError);

  write_text(p, "t,soc\n0,0.1\n");
  CHECK_THROWS_AS(sdad::load_soc_csv(p), sdad::IngestError);

  write_text(p, "t,soc\n0,0.1\nnonsense\n");
  CHECK_THROWS_AS(sdad::load_soc_csv(p), sdad::IngestError);
}

TEST_CASE("soc csv tolerates carriage returns") {
  const auto p = scratch_file("crlf_soc.csv");
  write_text(p, "t,soc\r\n0,0.25\r\n1,0.75\r\n");
  const auto x = sdad::load_soc_csv(p);
  CHECK(x[0] == 0.25);
  CHECK(x[1] == 0.75);
}

TEST_CASE("demand csv round trip is byte stable") {
  Eigen::VectorXd d(3);
  d << 1500.5, 2.0, 1750.25;
  const auto p = scratch_file("roundtrip_demand.csv");
  sdad::save_demand_csv(d, p);
  CHECK(read_text(p) == "t,demand_mw\n0,1500.5\n1,2\n2,1750.25\n");
  const Eigen::VectorXd back = sdad::load_demand_csv(p);
  REQUIRE(back.size() == 3);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(back[i] == d[i]);
}

TEST_CASE("demand csv ingestion is validated") {
  const auto p = scratch_file("bad_demand.csv");
  write_text(p, "t,load\n0,10\n");
  CHECK_THROWS_AS(sdad::load_demand_csv(p), sdad::IngestError);
  write_text(p, "t,demand_mw\n1,10\n");
  CHECK_THROWS_AS(sdad::load_demand_csv(p), sdad::IngestError);
  write_text(p, "t,demand_mw\n0,inf\n");
  CHECK_THROWS_AS(sdad::load_demand_csv(p), sdad::IngestError);
  write_text(p, "t,demand_mw\n");
  CHECK_THROWS_AS(sdad::load_demand_csv(p), sdad::IngestError);
}

TEST_CASE("synthetic demand peaks at the configured hour") {
  const Eigen::VectorXd d = sdad::synthetic_demand({});
  REQUIRE(d.size() == 24);
  CHECK(d[18] == 2000.0);
  CHECK(d[6] == doctest::Approx(1000.0));
  CHECK(d.sum() == doctest::Approx(36000.0).epsilon(1e-12));
  CHECK(d.minCoeff() >= 1000.0 - 1e-9);
}

TEST_CASE("synthetic demand validates its shape") {
  CHECK_THROWS_AS(sdad::synthetic_demand({.horizon = 0}), sdad::ConfigError);
  CHECK_THROWS_AS(sdad::synthetic_demand({.amplitude = -1.0}), sdad::ConfigError);
  CHECK_THROWS_AS(sdad::synthetic_demand({.base = 100.0, .amplitude = 200.0}),
                  sdad::ConfigError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(sdad::synthetic_demand({.base = inf}), sdad::ConfigError);
}

TEST_CASE("line charts escape markup and break on gaps") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const sdad::SvgSeries gapped{"s&1", {1.0, 2.0, nan, 3.0, 4.0}, {}};
  const sdad::SvgSeries lonely{"dot", {nan, 5.0, nan}, {}};

  const std::string svg = sdad::render_line_chart("a&b", "hour", "cost", {gapped, lonely});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&amp;b") != std::string::npos);
  CHECK(svg.find("s&amp;1") != std::string::npos);
  size_t polylines = 0;
  for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  const auto p = scratch_file("chart.svg");
  sdad::write_line_chart(p, "a&b", "hour", "cost", {gapped, lonely});
  CHECK(read_text(p) == svg);
}

TEST_CASE("identical chart inputs render identical bytes") {
  const sdad::SvgSeries s{"cost", {10.0, 12.5, 11.0, 14.0}, {25.0, 50.0, 75.0, 100.0}};
  const std::string a = sdad::render_line_chart("sweep", "budget", "cost", {s});
  const std::string b = sdad::render_line_chart("sweep", "budget", "cost", {s});
  CHECK(a == b);
  CHECK(a.find("sweep") != std::string::npos);
}
