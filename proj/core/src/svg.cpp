#include "erwlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "erwlab/error.hpp"

namespace erw {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg_plot(const std::string& title,
                            const std::vector<SvgSeries>& series,
                            const std::string& x_label, const std::string& y_label,
                            int width, int height) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax)) {  // no finite points
    xmin = 0; xmax = 1; ymin = 0; ymax = 1;
  }
  if (xmax == xmin) { xmax += 0.5; xmin -= 0.5; }
  if (ymax == ymin) { ymax += 0.5; ymin -= 0.5; }
  const double xpad = 0.04 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  const double ml = 64, mr = 16, mt = 36, mb = 48;  // margins
  const double pw = width - ml - mr, ph = height - mt - mb;
  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";

  // axes box and ticks
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg << "<line x1=\"" << sx(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(fx)
        << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << num(fx) << "</text>\n";
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << sy(fy) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << num(fy) << "</text>\n";
  }
  if (!x_label.empty())
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape(x_label) << "</text>\n";
  if (!y_label.empty())
    svg << "<text x=\"14\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
        << "transform=\"rotate(-90 14 " << mt + ph / 2 << ")\">" << escape(y_label)
        << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const auto& s = series[k];
    if (s.lines) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"";
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        svg << num(sx(x)) << "," << num(sy(y)) << " ";
      }
      svg << "\"/>\n";
    } else {
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        svg << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y))
            << "\" r=\"2\" fill=\"" << color << "\"/>\n";
      }
    }
    if (!s.label.empty())
      svg << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 + 14 * double(k)
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
          << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series,
                    const std::string& x_label, const std::string& y_label) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::invalid_params, "write_svg_plot: cannot open " + path);
  out << render_svg_plot(title, series, x_label, y_label);
}

}  // namespace erw
