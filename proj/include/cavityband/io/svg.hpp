#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>
#include <string>
#include <vector>

#include "cavityband/io/csv.hpp"

namespace cavityband::io {

enum class Marker { Line, Cross, Diamond };

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Marker marker = Marker::Line;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::optional<std::pair<double, double>> y_range;
};

/// Values on a rectangular (x, y) grid; z[iy][ix].
struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::vector<double>> z;
  bool log_scale = false;
};

namespace svg_detail {

inline constexpr double kWidth = 640, kHeight = 480;
inline constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
inline constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                        "#9467bd", "#ff7f0e", "#17becf"};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline void widen(double& lo, double& hi) {
  if (!(lo < hi)) {
    const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                        int size = 12, bool rotate = false) {
  std::string out = "<text x=\"" + format_fixed(x) + "\" y=\"" + format_fixed(y) +
                    "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) +
                    "\" text-anchor=\"" + anchor + "\"";
  if (rotate) out += " transform=\"rotate(-90 " + format_fixed(x) + " " + format_fixed(y) + ")\"";
  return out + ">" + escape(s) + "</text>\n";
}

inline std::string axes(const Frame& f, const std::string& title, const std::string& xl,
                        const std::string& yl) {
  std::string out;
  const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
  out += "<rect x=\"" + format_fixed(l) + "\" y=\"" + format_fixed(t) + "\" width=\"" +
         format_fixed(r - l) + "\" height=\"" + format_fixed(b - t) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out += text(f.px(xv), b + 16, format_number(std::round(xv * 1e4) / 1e4), "middle", 10);
    out += text(l - 6, f.py(yv) + 4, format_number(std::round(yv * 1e4) / 1e4), "end", 10);
  }
  out += text(kWidth / 2, 24, title, "middle", 14);
  out += text((l + r) / 2, kHeight - 12, xl);
  out += text(18, (t + b) / 2, yl, "middle", 12, true);
  return out;
}

inline std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(kWidth, 0) +
         "\" height=\"" + format_fixed(kHeight, 0) + "\" viewBox=\"0 0 " + format_fixed(kWidth, 0) +
         " " + format_fixed(kHeight, 0) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

/// Piecewise-linear dark-blue to yellow ramp.
inline std::string colour(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops = {
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace svg_detail

inline std::string render(const LinePlot& p) {
  using namespace svg_detail;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (p.y_range) std::tie(y0, y1) = *p.y_range;
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::string out = header();
  out += "<clipPath id=\"plot\"><rect x=\"" + format_fixed(kLeft) + "\" y=\"" + format_fixed(kTop) +
         "\" width=\"" + format_fixed(kWidth - kLeft - kRight) + "\" height=\"" +
         format_fixed(kHeight - kTop - kBottom) + "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n";
  for (std::size_t n = 0; n < p.series.size(); ++n) {
    const auto& s = p.series[n];
    const std::string col = kPalette[n % kPalette.size()];
    if (s.marker == Marker::Line) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        pts += format_fixed(f.px(s.x[i])) + "," + format_fixed(f.py(s.y[i])) + " ";
      }
      out += "<polyline fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      continue;
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double cx = f.px(s.x[i]), cy = f.py(s.y[i]), r = 3.0;
      if (s.marker == Marker::Cross)
        out += "<path stroke=\"" + col + "\" d=\"M" + format_fixed(cx - r) + " " + format_fixed(cy - r) +
               "L" + format_fixed(cx + r) + " " + format_fixed(cy + r) + "M" + format_fixed(cx - r) +
               " " + format_fixed(cy + r) + "L" + format_fixed(cx + r) + " " + format_fixed(cy - r) +
               "\"/>\n";
      else
        out += "<path fill=\"none\" stroke=\"" + col + "\" d=\"M" + format_fixed(cx) + " " +
               format_fixed(cy - r) + "L" + format_fixed(cx + r) + " " + format_fixed(cy) + "L" +
               format_fixed(cx) + " " + format_fixed(cy + r) + "L" + format_fixed(cx - r) + " " +
               format_fixed(cy) + "Z\"/>\n";
    }
  }
  out += "</g>\n";
  out += axes(f, p.title, p.x_label, p.y_label);
  for (std::size_t n = 0; n < p.series.size(); ++n) {
    const double y = kTop + 14 + 14.0 * static_cast<double>(n);
    out += "<rect x=\"" + format_fixed(kWidth - kRight - 130) + "\" y=\"" + format_fixed(y - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + kPalette[n % kPalette.size()] + "\"/>\n";
    out += text(kWidth - kRight - 115, y + 1, p.series[n].label, "start", 10);
  }
  return out + "</svg>\n";
}

inline std::string render(const Heatmap& h) {
  using namespace svg_detail;
  if (h.x.empty() || h.y.empty()) return header() + "</svg>\n";
  auto value = [&](double v) {
    if (!h.log_scale) return v;
    return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
  };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : h.z)
    for (double v : row) {
      const double t = value(v);
      if (!std::isfinite(t)) continue;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  widen(lo, hi);
  const double hx = h.x.size() > 1 ? 0.5 * (h.x.back() - h.x.front()) / (h.x.size() - 1) : 0.5;
  const double hy = h.y.size() > 1 ? 0.5 * (h.y.back() - h.y.front()) / (h.y.size() - 1) : 0.5;
  const Frame f{h.x.front() - hx, h.x.back() + hx, h.y.front() - hy, h.y.back() + hy};
  std::string out = header();
  // Cells at the bottom of the colour range are left to the background.
  const std::string floor = colour(0.0);
  out += "<rect x=\"" + format_fixed(f.px(f.x0)) + "\" y=\"" + format_fixed(f.py(f.y1)) + "\" width=\"" +
         format_fixed(f.px(f.x1) - f.px(f.x0)) + "\" height=\"" + format_fixed(f.py(f.y0) - f.py(f.y1)) +
         "\" fill=\"" + floor + "\"/>\n";
  for (std::size_t iy = 0; iy < h.y.size(); ++iy)
    for (std::size_t ix = 0; ix < h.x.size(); ++ix) {
      const std::string fill = colour((value(h.z[iy][ix]) - lo) / (hi - lo));
      if (fill == floor) continue;
      const double xa = f.px(h.x[ix] - hx), xb = f.px(h.x[ix] + hx);
      const double ya = f.py(h.y[iy] + hy), yb = f.py(h.y[iy] - hy);
      out += "<rect x=\"" + format_fixed(xa) + "\" y=\"" + format_fixed(ya) + "\" width=\"" +
             format_fixed(xb - xa + 0.3) + "\" height=\"" + format_fixed(yb - ya + 0.3) + "\" fill=\"" + fill + "\"/>\n";
    }
  out += axes(f, h.title, h.x_label, h.y_label);
  out += text(kWidth - kRight, kHeight - 12,
              std::string(h.log_scale ? "log10 " : "") + "range [" + format_number(lo) + ", " +
                  format_number(hi) + "]",
              "end", 10);
  return out + "</svg>\n";
}

}  // namespace cavityband::io
