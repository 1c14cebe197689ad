#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ealign/error.hpp"

namespace ealign::io {

struct Series {
  Series() = default;
  Series(std::string l, std::vector<double> xs, std::vector<double> ys, std::string c = "#1f77b4", bool d = false)
      : label(std::move(l)), x(std::move(xs)), y(std::move(ys)), color(std::move(c)), dashed(d) {}

  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool points = false;  ///< markers instead of a line
};

/// Minimal line chart.  Points outside the y range are clamped to it.
struct Figure {
  Figure() = default;
  Figure(std::string t, std::string xl, std::string yl, std::vector<Series> s)
      : title(std::move(t)), x_label(std::move(xl)), y_label(std::move(yl)), series(std::move(s)) {}

  std::string title, x_label, y_label;
  std::vector<Series> series;
  std::optional<double> y_min, y_max;
  double width = 640, height = 400;
};

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return p;
}

namespace detail {

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

inline std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return t;
}

}  // namespace detail

inline std::string render_svg(const Figure& f) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : f.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (f.y_min) y0 = std::max(y0, *f.y_min);
  if (f.y_max) y1 = std::min(y1, *f.y_max);
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 1e-12 * std::max(1.0, std::abs(y0))) {
    const double pad = std::max(0.5, 0.1 * std::abs(y0));
    y0 -= pad;
    y1 += pad;
  }
  const double ml = 70, mr = 150, mt = 36, mb = 48;
  const double pw = f.width - ml - mr, ph = f.height - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (std::clamp(y, y0, y1) - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << detail::esc(f.title)
    << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(x0, x1)) {
    o << "<line x1=\"" << px(t) << "\" x2=\"" << px(t) << "\" y1=\"" << mt + ph << "\" y2=\"" << mt + ph + 4
      << "\" stroke=\"black\"/><text x=\"" << px(t) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
      << detail::num(t) << "</text>\n";
  }
  for (double t : detail::ticks(y0, y1)) {
    o << "<line x1=\"" << ml - 4 << "\" x2=\"" << ml << "\" y1=\"" << py(t) << "\" y2=\"" << py(t)
      << "\" stroke=\"black\"/><text x=\"" << ml - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
      << detail::num(t) << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << f.height - 10 << "\" text-anchor=\"middle\">"
    << detail::esc(f.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::esc(f.y_label) << "</text>\n";
  int k = 0;
  for (const auto& s : f.series) {
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"4\" fill=\"" << s.color
          << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << px(s.x[i]) << "," << py(s.y[i]) << " ";
      }
      o << "\"/>\n";
    }
    const double ly = mt + 12 + 16 * k++;
    o << "<line x1=\"" << ml + pw + 10 << "\" x2=\"" << ml + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
      << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << "/><text x=\"" << ml + pw + 34 << "\" y=\"" << ly + 4 << "\">" << detail::esc(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::filesystem::path& path, const Figure& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_svg(f);
}

}  // namespace ealign::io
