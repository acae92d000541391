#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sdad {

// One plotted line; samples are spaced evenly on the x axis and a NaN entry
// breaks the polyline.
struct SvgSeries {
  std::string label;
  std::vector<double> y;
  std::vector<double> x;  // optional; defaults to the sample index
};

/* Deterministic self-contained line chart.
 *
 * Fixed canvas, palette, and number formatting, no external assets, so the
 * same data always produces the same bytes.
 */
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series);

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series);

}  // namespace sdad
