#pragma once

// Lowess smoothing of error-ratio curves and inference of the O-D error from
// a boarding or alighting count error.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odnoise/error.hpp"
#include "odnoise/od_core.hpp"

namespace odnoise {

struct CurvePoint {
  double n = 0.0;
  double ratio = 0.0;
};

/// Fitted ratio curve; queries between knots interpolate linearly.
struct LowessModel {
  std::vector<CurvePoint> knots;  // sorted by n
  double frac = 0.2;
  Side side = Side::boarding;
};

inline double tricube(double u) {
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

namespace detail {

/// Weighted least-squares line evaluated at x0. Falls back to the weighted
/// mean when all weight sits on a single abscissa.
inline double weighted_linear_at(std::span<const CurvePoint> pts, std::span<const double> w, double x0) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    sw += w[j];
    sx += w[j] * pts[j].n;
    sy += w[j] * pts[j].ratio;
  }
  if (!(sw > 0.0)) fail(ErrorCode::degenerate_design, "local window has zero total weight");
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double dx = pts[j].n - xbar;
    sxx += w[j] * dx * dx;
    sxy += w[j] * dx * (pts[j].ratio - ybar);
  }
  const double scale = std::max(1.0, std::abs(xbar));
  if (sxx <= 1e-12 * scale * scale * sw) return ybar;
  return ybar + (sxy / sxx) * (x0 - xbar);
}

}  // namespace detail

/// Local linear fit at `x0` over the ceil(frac * m) nearest points with
/// tricube weights (1 - (d / d_max)^3)^3, d_max being the distance to the
/// farthest point of the window. No robustness iterations.
inline double lowess_at(std::span<const CurvePoint> pts, double frac, double x0) {
  const std::size_t m = pts.size();
  const auto k = std::min(m, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(m) - 1e-12)));
  std::vector<double> dist(m);
  for (std::size_t j = 0; j < m; ++j) dist[j] = std::abs(pts[j].n - x0);
  std::vector<double> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  const double dmax = sorted[k - 1];
  std::vector<double> w(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (dmax > 0.0) {
      w[j] = tricube(dist[j] / dmax);
    } else {
      w[j] = dist[j] == 0.0 ? 1.0 : 0.0;
    }
  }
  return detail::weighted_linear_at(pts, w, x0);
}

inline LowessModel fit_lowess(std::vector<CurvePoint> points, double frac = 0.2, Side side = Side::boarding) {
  if (points.size() < 3) {
    fail(ErrorCode::invalid_argument, "lowess needs at least 3 points, got " + std::to_string(points.size()));
  }
  if (!(frac > 0.0 && frac <= 1.0)) fail(ErrorCode::invalid_argument, "frac must be in (0, 1]");
  if (frac * static_cast<double>(points.size()) < 2.0) {
    fail(ErrorCode::invalid_argument, "frac * count must be >= 2 (got " +
                                          std::to_string(frac * static_cast<double>(points.size())) + ")");
  }
  for (const auto& p : points) {
    if (!std::isfinite(p.n) || !std::isfinite(p.ratio)) fail(ErrorCode::invalid_argument, "non-finite lowess input");
  }
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  if (points.front().n == points.back().n) {
    fail(ErrorCode::degenerate_design, "all lowess inputs share the same N");
  }

  LowessModel model;
  model.frac = frac;
  model.side = side;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j > 0 && points[j].n == points[j - 1].n) continue;  // one knot per abscissa
    const double fitted = lowess_at(points, frac, points[j].n);
    if (!(fitted > 0.0)) {
      fail(ErrorCode::degenerate_design, "fitted ratio " + std::to_string(fitted) + " at N=" +
                                             std::to_string(points[j].n) + " is not positive");
    }
    model.knots.push_back({points[j].n, fitted});
  }
  return model;
}

inline double predict_ratio(const LowessModel& model, double n_stops) {
  if (model.knots.empty()) fail(ErrorCode::invalid_argument, "empty lowess model");
  const double lo = model.knots.front().n;
  const double hi = model.knots.back().n;
  if (!(n_stops >= lo && n_stops <= hi)) {
    fail(ErrorCode::extrapolation_refused, "N=" + std::to_string(n_stops) + " outside fitted range [" +
                                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const auto it = std::lower_bound(model.knots.begin(), model.knots.end(), n_stops,
                                   [](const CurvePoint& p, double x) { return p.n < x; });
  if (it->n == n_stops) return it->ratio;
  const auto& right = *it;
  const auto& left = *(it - 1);
  const double t = (n_stops - left.n) / (right.n - left.n);
  return left.ratio + t * (right.ratio - left.ratio);
}

/// Estimated O-D error = count error / predicted ratio. The count error is
/// Err(in) for a boarding model, Err(out) for an alighting one.
inline double infer_od_error(const LowessModel& model, double n_stops, double count_error) {
  if (!(count_error >= 0.0)) fail(ErrorCode::invalid_argument, "count error must be >= 0");
  const double ratio = predict_ratio(model, n_stops);
  if (!(ratio > 0.0)) fail(ErrorCode::internal, "predicted ratio is not positive");
  return count_error / ratio;
}

}  // namespace odnoise
