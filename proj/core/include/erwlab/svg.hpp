#pragma once

// Minimal SVG rendering for experiment plots: axes, one or more line/scatter
// series, a title.  Data-only plots with no styling knobs; anything fancier
// should consume the CSV dumps instead.

#include <string>
#include <utility>
#include <vector>

namespace erw {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool lines = true;  // polyline if true, markers otherwise
};

// Renders series into a self-contained SVG document.  Axis limits come from
// the data (padded); points with non-finite coordinates are skipped.
std::string render_svg_plot(const std::string& title,
                            const std::vector<SvgSeries>& series,
                            const std::string& x_label = "",
                            const std::string& y_label = "",
                            int width = 720, int height = 480);

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series,
                    const std::string& x_label = "",
                    const std::string& y_label = "");

}  // namespace erw
