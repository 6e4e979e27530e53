#pragma once

// Plot data and SVG scatter of error ratios against the number of stops:
// simulated boarding (red circles) and alighting (blue squares) ratios, a
// dashed sqrt(N) guide, and empirical points drawn as large crosses.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "odnoise/io.hpp"

namespace odnoise::report {

struct PlotData {
  std::vector<io::SweepRow> sweep;
  std::vector<io::EmpiricalRow> empirical;
};

inline std::string plot_data_csv(const PlotData& data) {
  std::string out = "series,label,n,value\n";
  for (const auto& r : data.sweep) out += "ratio_in,," + io::format_double(r.n) + "," + io::format_double(r.ratio_in) + "\n";
  for (const auto& r : data.sweep) {
    out += "ratio_out,," + io::format_double(r.n) + "," + io::format_double(r.ratio_out) + "\n";
  }
  for (const auto& r : data.sweep) {
    out += "sqrt_n,," + io::format_double(r.n) + "," + io::format_double(std::sqrt(r.n)) + "\n";
  }
  for (const auto& e : data.empirical) {
    out += "empirical_in," + io::csv_escape(e.label) + "," + io::format_double(e.n) + "," +
           io::format_optional(e.ratio_in) + "\n";
    out += "empirical_out," + io::csv_escape(e.label) + "," + io::format_double(e.n) + "," +
           io::format_optional(e.ratio_out) + "\n";
  }
  return out;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

/// Round an axis maximum up to 1, 2 or 5 times a power of ten.
inline double nice_ceiling(double v) {
  if (!(v > 0.0)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= v) return m * p;
  }
  return 10.0 * p;
}

struct Frame {
  double width = 640, height = 480;
  double left = 60, right = 20, top = 30, bottom = 50;
  double x_max = 1, y_max = 1;

  double x(double n) const { return left + (width - left - right) * n / x_max; }
  double y(double r) const { return height - bottom - (height - top - bottom) * r / y_max; }
};

}  // namespace detail

inline std::string plot_svg(const PlotData& data) {
  detail::Frame f;
  double x_max = 0.0, y_max = 0.0;
  for (const auto& r : data.sweep) {
    x_max = std::max(x_max, r.n);
    y_max = std::max({y_max, r.ratio_in, r.ratio_out, std::sqrt(r.n)});
  }
  for (const auto& e : data.empirical) {
    x_max = std::max(x_max, e.n);
    if (e.ratio_in) y_max = std::max(y_max, *e.ratio_in);
    if (e.ratio_out) y_max = std::max(y_max, *e.ratio_out);
  }
  f.x_max = detail::nice_ceiling(x_max);
  f.y_max = detail::nice_ceiling(y_max);
  using detail::fmt;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(f.width) + "\" height=\"" + fmt(f.height) +
       "\" viewBox=\"0 0 " + fmt(f.width) + " " + fmt(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes and ticks
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fmt(f.x(0)) + "\" y1=\"" + fmt(f.y(0)) + "\" x2=\"" + fmt(f.x(f.x_max)) + "\" y2=\"" +
       fmt(f.y(0)) + "\"/>\n";
  s += "<line x1=\"" + fmt(f.x(0)) + "\" y1=\"" + fmt(f.y(0)) + "\" x2=\"" + fmt(f.x(0)) + "\" y2=\"" +
       fmt(f.y(f.y_max)) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = f.x_max * k / 5.0;
    const double yv = f.y_max * k / 5.0;
    s += "<text x=\"" + fmt(f.x(xv)) + "\" y=\"" + fmt(f.y(0) + 15) + "\">" + io::format_double(xv) + "</text>\n";
    s += "<text x=\"" + fmt(f.x(0) - 20) + "\" y=\"" + fmt(f.y(yv) + 4) + "\">" + io::format_double(yv) + "</text>\n";
  }
  s += "<text x=\"" + fmt((f.x(0) + f.x(f.x_max)) / 2) + "\" y=\"" + fmt(f.height - 12) +
       "\">number of stops N</text>\n";
  s += "<text x=\"15\" y=\"" + fmt((f.y(0) + f.y(f.y_max)) / 2) + "\" transform=\"rotate(-90 15 " +
       fmt((f.y(0) + f.y(f.y_max)) / 2) + ")\">error ratio</text>\n";
  s += "</g>\n";

  // sqrt(N) guide
  if (!data.sweep.empty()) {
    std::string path;
    const double hi = data.sweep.back().n;
    const double lo = data.sweep.front().n;
    for (int k = 0; k <= 100; ++k) {
      const double n = lo + (hi - lo) * k / 100.0;
      path += (k == 0 ? "M" : " L") + fmt(f.x(n)) + "," + fmt(f.y(std::sqrt(n)));
    }
    s += "<path id=\"sqrt-n\" d=\"" + path + "\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  }

  s += "<g id=\"ratio-in\" fill=\"none\" stroke=\"red\">\n";
  for (const auto& r : data.sweep) {
    s += "<circle cx=\"" + fmt(f.x(r.n)) + "\" cy=\"" + fmt(f.y(r.ratio_in)) + "\" r=\"3\"/>\n";
  }
  s += "</g>\n<g id=\"ratio-out\" fill=\"none\" stroke=\"blue\">\n";
  for (const auto& r : data.sweep) {
    s += "<rect x=\"" + fmt(f.x(r.n) - 3) + "\" y=\"" + fmt(f.y(r.ratio_out) - 3) + "\" width=\"6\" height=\"6\"/>\n";
  }
  s += "</g>\n";

  if (!data.empirical.empty()) {
    s += "<g id=\"empirical\" stroke-width=\"2\">\n";
    auto cross = [&](double n, double r, const char* colour) {
      const double cx = f.x(n), cy = f.y(r);
      s += "<path d=\"M" + fmt(cx - 8) + "," + fmt(cy - 8) + " L" + fmt(cx + 8) + "," + fmt(cy + 8) + " M" +
           fmt(cx - 8) + "," + fmt(cy + 8) + " L" + fmt(cx + 8) + "," + fmt(cy - 8) + "\" stroke=\"" + colour +
           "\"/>\n";
    };
    for (const auto& e : data.empirical) {
      if (e.ratio_in) cross(e.n, *e.ratio_in, "red");
      if (e.ratio_out) cross(e.n, *e.ratio_out, "blue");
    }
    s += "</g>\n";
  }

  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<text x=\"" + fmt(f.x(0) + 10) + "\" y=\"" + fmt(f.top) + "\" fill=\"red\">boarding ratio</text>\n";
  s += "<text x=\"" + fmt(f.x(0) + 110) + "\" y=\"" + fmt(f.top) + "\" fill=\"blue\">alighting ratio</text>\n";
  s += "<text x=\"" + fmt(f.x(0) + 215) + "\" y=\"" + fmt(f.top) + "\" fill=\"gray\">sqrt(N)</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace odnoise::report
