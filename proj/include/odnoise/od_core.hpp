#pragma once

// O-D share matrices, error matrices and the RMS error metrics relating the
// O-D error to the boarding and alighting errors.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odnoise/error.hpp"

namespace odnoise {

inline constexpr double kShareSumTolerance = 1e-9;
inline constexpr double kZeroTolerance = 1e-12;

/// Boarding = rows (origin stop i), alighting = columns (destination stop o).
enum class Side { boarding, alighting };

inline std::string to_string(Side side) { return side == Side::boarding ? "boarding" : "alighting"; }

inline Side parse_side(const std::string& s) {
  if (s == "boarding" || s == "in") return Side::boarding;
  if (s == "alighting" || s == "out") return Side::alighting;
  fail(ErrorCode::parse_error, "unknown side '" + s + "', expected boarding or alighting");
}

/// Which entries a ShareMatrix accepts.
///
/// Reference matrices are proper shares in [0, 1]. Unclamped noisy estimates
/// still sum to one but may hold negative cells, so they are built `signed_estimate`.
enum class EntryPolicy { nonnegative, signed_estimate };

namespace detail {

/// Sum in index order with Neumaier compensation so results do not depend on
/// how a caller batched the accumulation.
inline double stable_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace detail

/// Square row-major grid; row index = boarding stop, column = alighting stop.
class SquareGrid {
 public:
  SquareGrid() = default;
  SquareGrid(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (values_.size() != n_ * n_) {
      fail(ErrorCode::dimension_mismatch, "grid of size " + std::to_string(n_) + " needs " +
                                              std::to_string(n_ * n_) + " values, got " +
                                              std::to_string(values_.size()));
    }
  }

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t o) const { return values_[i * n_ + o]; }
  std::span<const double> values() const noexcept { return values_; }

  double total() const { return detail::stable_sum(values_); }

  /// Row sums, T_i. in the usual notation.
  std::vector<double> row_sums() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out[i] = detail::stable_sum(std::span<const double>(values_).subspan(i * n_, n_));
    }
    return out;
  }

  /// Column sums, T_.o in the usual notation.
  std::vector<double> column_sums() const {
    std::vector<double> out(n_, 0.0);
    std::vector<double> column(n_);
    for (std::size_t o = 0; o < n_; ++o) {
      for (std::size_t i = 0; i < n_; ++i) column[i] = values_[i * n_ + o];
      out[o] = detail::stable_sum(column);
    }
    return out;
  }

 protected:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// N x N matrix of trip shares summing to one.
class ShareMatrix : public SquareGrid {
 public:
  ShareMatrix() = default;

  ShareMatrix(std::size_t n, std::vector<double> shares, std::vector<std::string> labels = {},
              EntryPolicy policy = EntryPolicy::nonnegative)
      : SquareGrid(n, std::move(shares)), labels_(std::move(labels)), policy_(policy) {
    if (n_ < 2) fail(ErrorCode::invalid_argument, "an O-D matrix needs at least 2 stops, got " + std::to_string(n_));
    if (!labels_.empty() && labels_.size() != n_) {
      fail(ErrorCode::dimension_mismatch,
           "expected " + std::to_string(n_) + " stop labels, got " + std::to_string(labels_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double v = values_[k];
      if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "non-finite share at cell " + cell_name(k));
      if (policy_ == EntryPolicy::nonnegative && (v < 0.0 || v > 1.0)) {
        fail(ErrorCode::invalid_argument, "share " + std::to_string(v) + " outside [0, 1] at cell " + cell_name(k));
      }
    }
    const double sum = total();
    if (std::abs(sum - 1.0) > kShareSumTolerance) {
      fail(ErrorCode::invalid_argument, "shares sum to " + std::to_string(sum) + ", expected 1");
    }
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  EntryPolicy policy() const noexcept { return policy_; }

  /// Stop label, falling back to the 1-based index.
  std::string label(std::size_t i) const { return labels_.empty() ? std::to_string(i + 1) : labels_[i]; }

  bool has_negative_entries() const {
    for (double v : values_) {
      if (v < 0.0) return true;
    }
    return false;
  }

  /// Mass strictly below the diagonal; O-D pairs against the main direction
  /// of a line. Informational only.
  double mass_below_diagonal() const {
    double mass = 0.0;
    for (std::size_t i = 1; i < n_; ++i) {
      for (std::size_t o = 0; o < i; ++o) mass += (*this)(i, o);
    }
    return mass;
  }

 private:
  std::string cell_name(std::size_t k) const {
    return "(" + std::to_string(k / n_) + "," + std::to_string(k % n_) + ")";
  }

  std::vector<std::string> labels_;
  EntryPolicy policy_ = EntryPolicy::nonnegative;
};

/// Signed error matrix [estimate - reference]; entries sum to zero.
class DeltaMatrix : public SquareGrid {
 public:
  DeltaMatrix() = default;

  DeltaMatrix(std::size_t n, std::vector<double> deltas) : SquareGrid(n, std::move(deltas)) {
    if (n_ < 1) fail(ErrorCode::invalid_argument, "empty delta matrix");
    for (double v : values_) {
      if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
        fail(ErrorCode::invalid_argument, "delta entry " + std::to_string(v) + " outside [-1, 1]");
      }
    }
    const double sum = total();
    if (std::abs(sum) > kShareSumTolerance) {
      fail(ErrorCode::invalid_argument, "delta entries sum to " + std::to_string(sum) + ", expected 0");
    }
  }

  static DeltaMatrix zero(std::size_t n) { return DeltaMatrix(n, std::vector<double>(n * n, 0.0)); }
};

/// Err, Err(in), Err(out) and the two error ratios for one reference/estimate pair.
///
/// A ratio is empty (undefined) when the O-D error is zero; it is never
/// reported as 0 or infinity.
struct ErrorSummary {
  double err_od = 0.0;
  double err_in = 0.0;
  double err_out = 0.0;
  std::optional<double> ratio_in;
  std::optional<double> ratio_out;
};

inline DeltaMatrix delta(const ShareMatrix& reference, const ShareMatrix& estimate) {
  if (reference.n() != estimate.n()) {
    fail(ErrorCode::dimension_mismatch, "reference has N=" + std::to_string(reference.n()) +
                                            " but estimate has N=" + std::to_string(estimate.n()));
  }
  std::vector<double> d(reference.values().size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = estimate.values()[k] - reference.values()[k];
  return DeltaMatrix(reference.n(), std::move(d));
}

namespace detail {

inline double rms(std::span<const double> values, double denominator) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  return std::sqrt(sq / denominator);
}

inline void fill_ratios(ErrorSummary& s) {
  if (s.err_od > 0.0) {
    s.ratio_in = s.err_in / s.err_od;
    s.ratio_out = s.err_out / s.err_od;
  }
}

}  // namespace detail

/// RMS O-D error over all N^2 cells (structurally empty pairs included), the
/// RMS of the row sums (boarding) and of the column sums (alighting).
inline ErrorSummary error_summary(const DeltaMatrix& d) {
  const auto n = static_cast<double>(d.n());
  ErrorSummary s;
  s.err_od = detail::rms(d.values(), n * n);
  s.err_in = detail::rms(d.row_sums(), n);
  s.err_out = detail::rms(d.column_sums(), n);
  if (s.err_od == 0.0 && (s.err_in > 0.0 || s.err_out > 0.0)) {
    fail(ErrorCode::internal, "zero O-D error with nonzero marginal error");
  }
  detail::fill_ratios(s);
  return s;
}

/// Boarding and alighting shares per stop, e.g. from optical counts.
struct MarginalShares {
  std::vector<std::string> labels;
  std::vector<double> boarding;
  std::vector<double> alighting;

  std::size_t size() const noexcept { return boarding.size(); }
};

/// Error summary where Err(in) and Err(out) compare the estimate's marginals
/// with externally observed counts instead of the reference marginals.
inline ErrorSummary error_summary(const ShareMatrix& reference, const ShareMatrix& estimate,
                                  const MarginalShares& counts) {
  const DeltaMatrix d = delta(reference, estimate);
  if (counts.boarding.size() != d.n() || counts.alighting.size() != d.n()) {
    fail(ErrorCode::dimension_mismatch, "counts cover " + std::to_string(counts.size()) +
                                            " stops but the matrices have N=" + std::to_string(d.n()));
  }
  const auto n = static_cast<double>(d.n());
  const auto rows = estimate.row_sums();
  const auto cols = estimate.column_sums();
  std::vector<double> din(d.n()), dout(d.n());
  for (std::size_t k = 0; k < d.n(); ++k) {
    din[k] = rows[k] - counts.boarding[k];
    dout[k] = cols[k] - counts.alighting[k];
  }
  ErrorSummary s;
  s.err_od = detail::rms(d.values(), n * n);
  s.err_in = detail::rms(din, n);
  s.err_out = detail::rms(dout, n);
  detail::fill_ratios(s);
  return s;
}

}  // namespace odnoise
