// Log-log line plots as standalone SVG.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "experiment.hpp"

namespace pconvex::app {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string plot_svg(const Plot& p) {
  constexpr double W = 640, H = 420, L = 80, R = 180, T = 40, B = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& l : p.lines)
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!(l.x[i] > 0 && l.y[i] > 0)) continue;
      xmin = std::min(xmin, std::log10(l.x[i]));
      xmax = std::max(xmax, std::log10(l.x[i]));
      ymin = std::min(ymin, std::log10(l.y[i]));
      ymax = std::max(ymax, std::log10(l.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = -1, xmax = 0, ymin = -1, ymax = 0;
  xmin = std::floor(xmin), xmax = std::ceil(xmax), ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax == xmin) xmax += 1;
  if (ymax == ymin) ymax += 1;
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(W / 2 - R / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xmin; d <= xmax + 1e-9; d += 1) {
    os << "<line x1=\"" << num(px(d)) << "\" y1=\"" << T << "\" x2=\"" << num(px(d)) << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(px(d)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = ymin; d <= ymax + 1e-9; d += 1) {
    os << "<line x1=\"" << L << "\" y1=\"" << num(py(d)) << "\" x2=\"" << W - R << "\" y2=\"" << num(py(d))
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(d) + 4) << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  os << "<text x=\"" << num(L + (W - L - R) / 2) << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape(p.xlabel) << "</text>\n";
  os << "<text transform=\"translate(20," << num(T + (H - T - B) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(p.ylabel) << "</text>\n";
  for (std::size_t k = 0; k < p.lines.size(); ++k) {
    const auto& l = p.lines[k];
    const char* col = colors[k % 8];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < l.x.size(); ++i)
      if (l.x[i] > 0 && l.y[i] > 0) os << num(px(std::log10(l.x[i]))) << "," << num(py(std::log10(l.y[i]))) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < l.x.size(); ++i)
      if (l.x[i] > 0 && l.y[i] > 0)
        os << "<circle cx=\"" << num(px(std::log10(l.x[i]))) << "\" cy=\"" << num(py(std::log10(l.y[i])))
           << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    const double ly = T + 14 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << W - R + 32 << "\" y2=\"" << num(ly - 4)
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 38 << "\" y=\"" << num(ly) << "\">" << escape(l.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pconvex::app
