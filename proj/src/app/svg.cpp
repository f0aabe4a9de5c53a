#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qpool/app.hpp"

namespace qpool::app {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"};
constexpr double kPanelW = 460;
constexpr double kPanelH = 320;
constexpr double kMarginL = 55;
constexpr double kMarginR = 15;
constexpr double kMarginT = 35;
constexpr double kMarginB = 45;
constexpr double kLegendH = 18;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels) {
  std::size_t legend_rows = 0;
  for (const auto& p : panels) legend_rows = std::max(legend_rows, p.series.size());
  const double width = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  const double height = kPanelH + kLegendH * static_cast<double>(legend_rows) + 10;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                    fmt(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& panel = panels[pi];
    const double ox = kPanelW * static_cast<double>(pi);
    std::size_t epochs = 1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : panel.series) {
      epochs = std::max(epochs, s.mean.size());
      for (double v : s.lo) lo = std::min(lo, v);
      for (double v : s.hi) hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-6) {
      lo -= 0.05;
      hi += 0.05;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double x0 = ox + kMarginL;
    const double x1 = ox + kPanelW - kMarginR;
    const double y0 = kMarginT;
    const double y1 = kPanelH - kMarginB;
    const auto px = [&](std::size_t e) {
      return epochs <= 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(e) / static_cast<double>(epochs - 1);
    };
    const auto py = [&](double v) { return y1 - (y1 - y0) * (v - lo) / (hi - lo); };

    svg += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
           escape(panel.title) + "</text>\n";
    svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
           fmt(y1 - y0) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      svg += "<text x=\"" + fmt(x0 - 5) + "\" y=\"" + fmt(py(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) +
             "</text>\n";
    }
    svg += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(y1 + 15) + "\" text-anchor=\"middle\">1</text>\n";
    svg += "<text x=\"" + fmt(x1) + "\" y=\"" + fmt(y1 + 15) + "\" text-anchor=\"middle\">" +
           std::to_string(epochs) + "</text>\n";
    svg += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(y1 + 32) + "\" text-anchor=\"middle\">epoch</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const auto& s = panel.series[si];
      const std::string color = kPalette[si % std::size(kPalette)];
      if (!s.lo.empty() && s.lo.size() == s.hi.size()) {
        std::string pts;
        for (std::size_t e = 0; e < s.hi.size(); ++e) pts += fmt(px(e)) + "," + fmt(py(s.hi[e])) + " ";
        for (std::size_t e = s.lo.size(); e-- > 0;) pts += fmt(px(e)) + "," + fmt(py(s.lo[e])) + " ";
        svg += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
      }
      std::string line;
      for (std::size_t e = 0; e < s.mean.size(); ++e) line += fmt(px(e)) + "," + fmt(py(s.mean[e])) + " ";
      svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.6\"/>\n";

      const double ly = kPanelH + kLegendH * static_cast<double>(si);
      svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(ly - 9) + "\" width=\"12\" height=\"10\" fill=\"" + color +
             "\"/>\n";
      svg += "<text x=\"" + fmt(x0 + 18) + "\" y=\"" + fmt(ly) + "\">" + escape(s.label) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace qpool::app
