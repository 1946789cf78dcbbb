#pragma once

// Minimal SVG renderings of report tables. CSV stays the contract; these are previews.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "grnn/detail/text.hpp"
#include "grnn/regression.hpp"

namespace grnn::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Box {
  std::string label;
  FiveNumber stats;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
inline const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  static Frame fit(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    return {x0, x1, y0 - pad, y1 + pad};
  }
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline std::string n(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

inline void open(std::ostringstream& o, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                 const Frame& f) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n"
    << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
    << escape(xlabel) << "</text>\n"
    << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << kHeight / 2
    << ")\">" << escape(ylabel) << "</text>\n"
    << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
    << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << kLeft - 5 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">" << n(y) << "</text>\n";
  }
}

}  // namespace detail

/// Line plot (or scatter when `lines` is false) with a legend on the right.
inline std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series, bool lines = true) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = x1 = y0 = y1 = 0.0;
  const auto f = detail::Frame::fit(x0, x1, y0, y1);
  std::ostringstream o;
  detail::open(o, title, xlabel, ylabel, f);
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    o << "<text x=\"" << f.px(x) << "\" y=\"" << detail::kHeight - detail::kBottom + 15
      << "\" text-anchor=\"middle\">" << detail::n(x) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = detail::kPalette[k % std::size(detail::kPalette)];
    if (lines) {
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
      o << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i)
      o << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i]) << "\" r=\"2.5\" fill=\"" << colour << "\"/>\n";
    o << "<text x=\"" << detail::kWidth - detail::kRight + 10 << "\" y=\"" << detail::kTop + 12 + 14 * k
      << "\" fill=\"" << colour << "\">" << detail::escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// One box (whiskers at min and max) per group.
inline std::string box_plot(const std::string& title, const std::string& ylabel, const std::vector<Box>& boxes) {
  double y0 = INFINITY, y1 = -INFINITY;
  for (const auto& b : boxes) {
    y0 = std::min(y0, b.stats.min);
    y1 = std::max(y1, b.stats.max);
  }
  if (!std::isfinite(y0)) y0 = y1 = 0.0;
  const auto f = detail::Frame::fit(-0.5, static_cast<double>(boxes.size()) - 0.5, y0, y1);
  std::ostringstream o;
  detail::open(o, title, "", ylabel, f);
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& s = boxes[k].stats;
    const double cx = f.px(static_cast<double>(k)), half = 0.3 * (f.px(1.0) - f.px(0.0));
    o << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << f.py(s.min) << "\" y2=\"" << f.py(s.max)
      << "\" stroke=\"black\"/>\n"
      << "<rect x=\"" << cx - half << "\" y=\"" << f.py(s.q3) << "\" width=\"" << 2 * half << "\" height=\""
      << std::max(0.5, f.py(s.q1) - f.py(s.q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n"
      << "<line x1=\"" << cx - half << "\" x2=\"" << cx + half << "\" y1=\"" << f.py(s.median) << "\" y2=\""
      << f.py(s.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << cx << "\" y=\"" << detail::kHeight - detail::kBottom + 15 << "\" text-anchor=\"middle\">"
      << detail::escape(boxes[k].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace grnn::svg
