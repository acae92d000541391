#include "sdad/svg.hpp"

#include "sdad/errors.hpp"
#include "sdad/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace sdad {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 540.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 44.0;
constexpr double kMarginBottom = 56.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

// Pixel coordinates at fixed precision keep the output bytes stable without
// bloating the file.
std::string px(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  (void)ec;
  return std::string(buf, ptr);
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Tick step of the form {1,2,5} * 10^k closest below range/count.
double nice_step(double range, int count) {
  const double raw = range / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double factor = 1.0;
  if (norm >= 5.0) {
    factor = 5.0;
  } else if (norm >= 2.0) {
    factor = 2.0;
  }
  return factor * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void absorb(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
      return;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double slack = std::max(1.0, std::abs(hi)) * 0.05;
      lo -= slack;
      hi += slack;
      return;
    }
    const double slack = (hi - lo) * 0.05;
    lo -= slack;
    hi += slack;
  }
};

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double xv = i < s.x.size() ? s.x[i] : static_cast<double>(i);
      if (!std::isfinite(xv)) continue;
      xr.absorb(xv);
      yr.absorb(s.y[i]);
    }
  }
  xr.pad();
  yr.pad();

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto map_x = [&](double v) { return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto map_y = [&](double v) { return kMarginTop + (1.0 - (v - yr.lo) / (yr.hi - yr.lo)) * plot_h; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"540\" "
         "viewBox=\"0 0 960 540\">\n";
  out += "<rect width=\"960\" height=\"540\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"480\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"17\" fill=\"#222222\">" +
         escape(title) + "</text>\n";

  // Grid and ticks.
  const double ystep = nice_step(yr.hi - yr.lo, 5);
  for (double v = std::ceil(yr.lo / ystep) * ystep; v <= yr.hi + 1e-9 * ystep; v += ystep) {
    const std::string yy = px(map_y(v));
    out += "<line x1=\"" + px(kMarginLeft) + "\" y1=\"" + yy + "\" x2=\"" +
           px(kWidth - kMarginRight) + "\" y2=\"" + yy +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + px(kMarginLeft - 8.0) + "\" y=\"" + yy +
           "\" text-anchor=\"end\" dominant-baseline=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" fill=\"#444444\">" +
           format_double(v) + "</text>\n";
  }
  const double xstep = nice_step(xr.hi - xr.lo, 8);
  for (double v = std::ceil(xr.lo / xstep) * xstep; v <= xr.hi + 1e-9 * xstep; v += xstep) {
    const std::string xx = px(map_x(v));
    out += "<line x1=\"" + xx + "\" y1=\"" + px(kMarginTop) + "\" x2=\"" + xx + "\" y2=\"" +
           px(kHeight - kMarginBottom) + "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + xx + "\" y=\"" + px(kHeight - kMarginBottom + 18.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\"#444444\">" +
           format_double(v) + "</text>\n";
  }

  // Axes.
  out += "<line x1=\"" + px(kMarginLeft) + "\" y1=\"" + px(kMarginTop) + "\" x2=\"" +
         px(kMarginLeft) + "\" y2=\"" + px(kHeight - kMarginBottom) +
         "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  out += "<line x1=\"" + px(kMarginLeft) + "\" y1=\"" + px(kHeight - kMarginBottom) + "\" x2=\"" +
         px(kWidth - kMarginRight) + "\" y2=\"" + px(kHeight - kMarginBottom) +
         "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  out += "<text x=\"" + px(kMarginLeft + plot_w / 2.0) + "\" y=\"" + px(kHeight - 14.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#222222\">" +
         escape(x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + px(kMarginTop + plot_h / 2.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222222\" "
         "transform=\"rotate(-90 18 " +
         px(kMarginTop + plot_h / 2.0) + ")\">" + escape(y_label) + "</text>\n";

  // Series; a NaN sample ends the current polyline and a fresh one starts at
  // the next finite sample.
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::vector<std::pair<double, double>> run;
    auto flush = [&]() {
      if (run.size() >= 2) {
        std::string pts;
        for (const auto& [xx, yy] : run) {
          if (!pts.empty()) pts += ' ';
          pts += px(xx) + "," + px(yy);
        }
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
      } else if (run.size() == 1) {
        out += "<circle cx=\"" + px(run[0].first) + "\" cy=\"" + px(run[0].second) +
               "\" r=\"2.5\" fill=\"";
        out += color;
        out += "\"/>\n";
      }
      run.clear();
    };
    for (size_t i = 0; i < s.y.size(); ++i) {
      const double xv = i < s.x.size() ? s.x[i] : static_cast<double>(i);
      if (!std::isfinite(s.y[i]) || !std::isfinite(xv)) {
        flush();
        continue;
      }
      run.emplace_back(map_x(xv), map_y(s.y[i]));
    }
    flush();
  }

  // Legend, one row per series, inside the top-right corner.
  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const double ly = kMarginTop + 14.0 + 18.0 * static_cast<double>(si);
    const double lx = kWidth - kMarginRight - 170.0;
    out += "<line x1=\"" + px(lx) + "\" y1=\"" + px(ly - 4.0) + "\" x2=\"" + px(lx + 26.0) +
           "\" y2=\"" + px(ly - 4.0) + "\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + px(lx + 32.0) + "\" y=\"" + px(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222222\">" +
           escape(series[si].label) + "</text>\n";
  }

  out += "</svg>\n";
  return out;
}

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write chart " + path.string());
  const std::string svg = render_line_chart(title, x_label, y_label, series);
  out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
}

}  // namespace sdad
