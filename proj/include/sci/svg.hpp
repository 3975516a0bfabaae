#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/errors.hpp"

// Hand-rolled line charts.  Fixed 800x600 canvas, 10 ticks per axis, one
// polyline per series plus a legend.  Output bytes depend only on the inputs.

namespace sci {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* svg_color(std::size_t i) {
  static const char* palette[] = {"#1f6fb4", "#e06c00", "#2a8a2a",
                                  "#c22a2a", "#7a4fb0", "#6d4c41"};
  return palette[i % 6];
}

inline std::string xml_escape(const std::string& s) {
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

}  // namespace detail

inline std::string render_svg_linechart(const std::vector<SvgSeries>& series,
                                        const std::string& x_label,
                                        const std::string& y_label,
                                        const std::string& title = "") {
  if (series.empty()) throw std::invalid_argument("svg: no series");
  for (const auto& s : series)
    if (s.points.empty()) throw std::invalid_argument("svg: empty series");

  double xmin = series[0].points[0].first, xmax = xmin;
  double ymin = series[0].points[0].second, ymax = ymin;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }

  const double W = 800, H = 600;
  const double L = 80, R = 30, T = 40, Bm = 60;  // margins
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - Bm - (y - ymin) / (ymax - ymin) * (H - T - Bm); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
         "width=\"800\" height=\"600\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";

  // axes with 10 ticks each
  const int kTicks = 10;
  for (int i = 0; i <= kTicks; ++i) {
    double fx = xmin + (xmax - xmin) * i / kTicks;
    double fy = ymin + (ymax - ymin) * i / kTicks;
    double gx = px(fx), gy = py(fy);
    out += "<line x1=\"" + detail::svg_num(gx) + "\" y1=\"" +
           detail::svg_num(T) + "\" x2=\"" + detail::svg_num(gx) + "\" y2=\"" +
           detail::svg_num(H - Bm) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + detail::svg_num(L) + "\" y1=\"" +
           detail::svg_num(gy) + "\" x2=\"" + detail::svg_num(W - R) +
           "\" y2=\"" + detail::svg_num(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + detail::svg_num(gx) + "\" y=\"" +
           detail::svg_num(H - Bm + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + detail::svg_num(fx) +
           "</text>\n";
    out += "<text x=\"" + detail::svg_num(L - 8) + "\" y=\"" +
           detail::svg_num(gy + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + detail::svg_num(fy) +
           "</text>\n";
  }
  out += "<rect x=\"" + detail::svg_num(L) + "\" y=\"" + detail::svg_num(T) +
         "\" width=\"" + detail::svg_num(W - L - R) + "\" height=\"" +
         detail::svg_num(H - T - Bm) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    out += "<polyline fill=\"none\" stroke=\"";
    out += detail::svg_color(si);
    out += "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[si].points.size(); ++i) {
      if (i) out += ' ';
      out += detail::svg_num(px(series[si].points[i].first)) + "," +
             detail::svg_num(py(series[si].points[i].second));
    }
    out += "\"/>\n";
  }

  // legend, upper right inside the frame
  for (std::size_t si = 0; si < series.size(); ++si) {
    double ly = T + 16 + 18 * static_cast<double>(si);
    out += "<line x1=\"" + detail::svg_num(W - R - 150) + "\" y1=\"" +
           detail::svg_num(ly) + "\" x2=\"" + detail::svg_num(W - R - 120) +
           "\" y2=\"" + detail::svg_num(ly) + "\" stroke=\"";
    out += detail::svg_color(si);
    out += "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::svg_num(W - R - 112) + "\" y=\"" +
           detail::svg_num(ly + 4) + "\" font-size=\"12\">" +
           detail::xml_escape(series[si].label) + "</text>\n";
  }

  out += "<text x=\"" + detail::svg_num((L + W - R) / 2) + "\" y=\"" +
         detail::svg_num(H - 16) +
         "\" font-size=\"13\" text-anchor=\"middle\">" +
         detail::xml_escape(x_label) + "</text>\n";
  out += "<text x=\"20\" y=\"" + detail::svg_num((T + H - Bm) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         detail::svg_num((T + H - Bm) / 2) + ")\">" +
         detail::xml_escape(y_label) + "</text>\n";
  if (!title.empty())
    out += "<text x=\"" + detail::svg_num(W / 2) +
           "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" +
           detail::xml_escape(title) + "</text>\n";
  out += "</svg>\n";
  return out;
}

inline void emit_svg_linechart(const std::vector<SvgSeries>& series,
                               const std::string& x_label,
                               const std::string& y_label,
                               const std::string& path,
                               const std::string& title = "") {
  std::string body = render_svg_linechart(series, x_label, y_label, title);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for writing: " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw io_error("short write: " + path);
}

}  // namespace sci
