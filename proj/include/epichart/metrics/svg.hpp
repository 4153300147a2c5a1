// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "epichart/metrics/series.hpp"

namespace epichart {
namespace svgplot {

inline constexpr double kWidth = 720.0;
inline constexpr double kHeight = 420.0;
inline constexpr double kLeft = 64.0;
inline constexpr double kRight = 24.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 48.0;

inline const char* kSeriesColors[] = {"#1f6fb2", "#c2452d", "#3d8f55",
                                      "#8056a7", "#b0812c", "#3e9a9a"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Tick step of the form {1,2,5}x10^k giving 4-8 ticks over the span.
inline double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2.0 * mag;
  if (r < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

struct Scale {
  double lo = 0.0, hi = 1.0, pix0 = 0.0, pix1 = 1.0;
  double operator()(double v) const {
    return pix0 + (v - lo) / (hi - lo) * (pix1 - pix0);
  }
};

inline void open_figure(std::ostream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
     << kHeight << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2
     << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
}

inline void draw_axes(std::ostream& os, const Scale& x, const Scale& y,
                      const std::string& xlabel, const std::string& ylabel) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom
     << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"#333\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"#333\"/>\n";
  double xs = nice_step(x.hi - x.lo);
  for (double v = std::ceil(x.lo / xs) * xs;
       x.pix1 > x.pix0 && v <= x.hi + 1e-9; v += xs) {
    double px = x(v);
    os << "<line x1=\"" << num(px) << "\" y1=\"" << kHeight - kBottom
       << "\" x2=\"" << num(px) << "\" y2=\"" << kHeight - kBottom + 5
       << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(px) << "\" y=\"" << kHeight - kBottom + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << v << "</text>\n";
  }
  double ys = nice_step(y.hi - y.lo);
  for (double v = std::ceil(y.lo / ys) * ys; v <= y.hi + 1e-9; v += ys) {
    double py = y(v);
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py) << "\" x2=\""
       << kLeft << "\" y2=\"" << num(py) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << v << "</text>\n";
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
     << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (kTop + kHeight - kBottom) / 2 << ")\">" << ylabel << "</text>\n";
}

struct FanSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<BandPoint> bands;
};

// Median line inside 50% and 95% envelopes, one color per series.
inline void write_fan_chart(std::ostream& os, const std::string& title,
                            const std::string& xlabel,
                            const std::string& ylabel,
                            const std::vector<FanSeries>& series) {
  open_figure(os, title);
  double xlo = 1e300, xhi = -1e300, ylo = 0.0, yhi = -1e300;
  for (const auto& s : series) {
    for (double v : s.xs) {
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
    for (const auto& b : s.bands) {
      ylo = std::min(ylo, b.q025);
      yhi = std::max(yhi, b.q975);
    }
  }
  if (!(xhi > xlo)) xhi = xlo + 1.0;
  if (!(yhi > ylo)) yhi = ylo + 1.0;
  yhi += 0.05 * (yhi - ylo);
  Scale x{xlo, xhi, kLeft, kWidth - kRight};
  Scale y{ylo, yhi, kHeight - kBottom, kTop};
  draw_axes(os, x, y, xlabel, ylabel);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kSeriesColors[si % 6];
    auto band = [&](double BandPoint::* lo, double BandPoint::* hi,
                    const char* opacity) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"" << opacity
         << "\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        os << num(x(s.xs[i])) << ',' << num(y(s.bands[i].*lo)) << ' ';
      }
      for (std::size_t i = s.xs.size(); i-- > 0;) {
        os << num(x(s.xs[i])) << ',' << num(y(s.bands[i].*hi)) << ' ';
      }
      os << "\"/>\n";
    };
    band(&BandPoint::q025, &BandPoint::q975, "0.15");
    band(&BandPoint::q25, &BandPoint::q75, "0.3");
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      os << num(x(s.xs[i])) << ',' << num(y(s.bands[i].q50)) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight - 6 << "\" y=\""
       << kTop + 16 + 16 * static_cast<double>(si)
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

inline void write_bar_chart(std::ostream& os, const std::string& title,
                            const std::string& ylabel,
                            const std::vector<std::string>& labels,
                            const std::vector<double>& values) {
  open_figure(os, title);
  double yhi = 1e-9;
  for (double v : values) yhi = std::max(yhi, v);
  yhi *= 1.08;
  Scale y{0.0, yhi, kHeight - kBottom, kTop};
  Scale x{0.0, static_cast<double>(values.size()), kLeft, kWidth - kRight};
  draw_axes(os, Scale{0, 1, kLeft, kLeft}, y, "", ylabel);
  for (std::size_t i = 0; i < values.size(); ++i) {
    double x0 = x(static_cast<double>(i) + 0.15);
    double x1 = x(static_cast<double>(i) + 0.85);
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y(values[i]))
       << "\" width=\"" << num(x1 - x0) << "\" height=\""
       << num(y(0.0) - y(values[i])) << "\" fill=\"#1f6fb2\"/>\n";
    os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\""
       << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-size=\"10\">" << labels[i]
       << "</text>\n";
  }
  os << "</svg>\n";
}

inline void write_heatmap(std::ostream& os, const std::string& title,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values /* row-major */) {
  std::size_t n = labels.size();
  open_figure(os, title);
  double vmax = 1e-12;
  for (double v : values) vmax = std::max(vmax, v);
  double cw = (kWidth - kLeft - kRight) / static_cast<double>(n);
  double ch = (kHeight - kTop - kBottom) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = values[i * n + j] / vmax;
      int r = static_cast<int>(255 - 215 * v);
      int g = static_cast<int>(245 - 180 * v);
      int b = 255;
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", r, g, b);
      os << "<rect x=\"" << num(kLeft + cw * static_cast<double>(j))
         << "\" y=\"" << num(kTop + ch * static_cast<double>(i))
         << "\" width=\"" << num(cw) << "\" height=\"" << num(ch)
         << "\" fill=\"" << color << "\" stroke=\"#fff\"/>\n";
    }
    os << "<text x=\"" << kLeft - 6 << "\" y=\""
       << num(kTop + ch * (static_cast<double>(i) + 0.6))
       << "\" text-anchor=\"end\" font-size=\"9\">" << labels[i]
       << "</text>\n";
    os << "<text x=\"" << num(kLeft + cw * (static_cast<double>(i) + 0.5))
       << "\" y=\"" << kHeight - kBottom + 14
       << "\" text-anchor=\"middle\" font-size=\"9\">" << labels[i]
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace svgplot
}  // namespace epichart
