#pragma once

// Monte Carlo sweeps of error ratios over the number of stops, empirical
// points from user data, and the stop-aggregation study.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "odnoise/error.hpp"
#include "odnoise/noise.hpp"
#include "odnoise/od_core.hpp"
#include "odnoise/rng.hpp"
#include "odnoise/synth.hpp"

namespace odnoise {

enum class Averaging { mean_of_ratios, ratio_of_mean_errors };
enum class ReferenceRefresh { per_n, per_replicate };

inline std::string to_string(Averaging a) {
  return a == Averaging::mean_of_ratios ? "mean_of_ratios" : "ratio_of_mean_errors";
}

inline Averaging parse_averaging(const std::string& s) {
  if (s == "mean_of_ratios") return Averaging::mean_of_ratios;
  if (s == "ratio_of_mean_errors") return Averaging::ratio_of_mean_errors;
  fail(ErrorCode::parse_error, "unknown averaging '" + s + "'");
}

struct SyntheticReference {
  std::uint64_t seed = 0;
};

using ReferenceSource = std::variant<SyntheticReference, ShareMatrix>;

inline std::vector<std::size_t> default_n_values() {
  std::vector<std::size_t> v;
  for (std::size_t n = 2; n <= 100; ++n) v.push_back(n);
  return v;
}

struct SweepConfig {
  std::vector<std::size_t> n_values = default_n_values();
  int replicates = 10;
  NoiseSpec spec;  // spec.seed is the master seed of the sweep
  ReferenceSource reference = SyntheticReference{};
  Averaging averaging = Averaging::mean_of_ratios;
  ReferenceRefresh refresh = ReferenceRefresh::per_n;
};

/// Sample mean, sample standard deviation and standard error of the mean.
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  m.mean = detail::stable_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    m.se = m.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return m;
}

struct SweepPoint {
  std::size_t n = 0;
  double ratio_in_mean = 0.0;
  double ratio_in_sd = 0.0;
  double ratio_out_mean = 0.0;
  double ratio_out_sd = 0.0;
  double err_od_mean = 0.0;
  std::size_t valid_replicates = 0;  // replicates with defined ratios
  std::vector<ErrorSummary> replicates;

  double ratio_in_se() const { return se(ratio_in_sd); }
  double ratio_out_se() const { return se(ratio_out_sd); }

 private:
  double se(double sd) const {
    return valid_replicates > 0 ? sd / std::sqrt(static_cast<double>(valid_replicates)) : 0.0;
  }
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepPoint> points;
};

inline void validate(const SweepConfig& config) {
  validate(config.spec);
  if (config.replicates < 1) fail(ErrorCode::invalid_argument, "replicates must be >= 1");
  if (config.n_values.empty()) fail(ErrorCode::invalid_argument, "n_values is empty");
  for (std::size_t k = 0; k < config.n_values.size(); ++k) {
    if (config.n_values[k] < 2) fail(ErrorCode::invalid_argument, "n_values must all be >= 2");
    if (k > 0 && config.n_values[k] <= config.n_values[k - 1]) {
      fail(ErrorCode::invalid_argument, "n_values must be strictly increasing");
    }
  }
  if (const auto* provided = std::get_if<ShareMatrix>(&config.reference)) {
    if (config.n_values.size() != 1 || config.n_values.front() != provided->n()) {
      fail(ErrorCode::dimension_mismatch, "provided reference has N=" + std::to_string(provided->n()) +
                                              "; n_values must be exactly [" + std::to_string(provided->n()) + "]");
    }
  }
}

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t replicate) {
  return derive_seed(derive_seed(master, streams::replicate, n), streams::replicate, replicate);
}

inline ShareMatrix sweep_reference(const SweepConfig& config, std::size_t n, std::size_t replicate) {
  if (const auto* provided = std::get_if<ShareMatrix>(&config.reference)) return *provided;
  const auto base = std::get<SyntheticReference>(config.reference).seed;
  std::uint64_t seed = derive_seed(base, streams::reference, n);
  if (config.refresh == ReferenceRefresh::per_replicate) seed = derive_seed(seed, streams::reference, replicate);
  return generate_uniform(n, seed);
}

/// Error summaries of `replicates` independent noise draws at one N.
inline SweepPoint sweep_point(const SweepConfig& config, std::size_t n) {
  SweepPoint point;
  point.n = n;
  std::optional<ShareMatrix> shared;
  if (config.refresh == ReferenceRefresh::per_n) shared = sweep_reference(config, n, 0);

  const auto r_count = static_cast<std::size_t>(config.replicates);
  std::vector<double> rin, rout, eod, ein, eout;
  for (std::size_t r = 0; r < r_count; ++r) {
    const ShareMatrix ref = shared ? *shared : sweep_reference(config, n, r);
    NoiseSpec spec = config.spec;
    spec.seed = replicate_seed(config.spec.seed, n, r);
    const auto perturbed = apply(spec, ref);
    const ErrorSummary s = error_summary(perturbed.realization.delta);
    point.replicates.push_back(s);
    eod.push_back(s.err_od);
    ein.push_back(s.err_in);
    eout.push_back(s.err_out);
    if (s.ratio_in && s.ratio_out) {
      rin.push_back(*s.ratio_in);
      rout.push_back(*s.ratio_out);
    }
  }

  const Moments min = moments(rin);
  const Moments mout = moments(rout);
  point.valid_replicates = rin.size();
  point.ratio_in_sd = min.sd;
  point.ratio_out_sd = mout.sd;
  point.err_od_mean = moments(eod).mean;
  if (config.averaging == Averaging::mean_of_ratios) {
    point.ratio_in_mean = min.mean;
    point.ratio_out_mean = mout.mean;
  } else if (point.err_od_mean > 0.0) {
    point.ratio_in_mean = moments(ein).mean / point.err_od_mean;
    point.ratio_out_mean = moments(eout).mean / point.err_od_mean;
  }
  return point;
}

/// Apply the spec `replicates` times at every N. Deterministic in the spec seed
/// (master) and the synthetic reference seed; each (N, replicate) pair draws
/// from its own derived seed.
inline SweepResult run_sweep(const SweepConfig& config) {
  validate(config);
  SweepResult result;
  result.config = config;
  result.points.reserve(config.n_values.size());
  for (std::size_t n : config.n_values) result.points.push_back(sweep_point(config, n));
  return result;
}

struct EmpiricalPoint {
  std::size_t n = 0;
  ErrorSummary summary;
};

inline std::vector<EmpiricalPoint> empirical_points(
    std::span<const std::pair<ShareMatrix, ShareMatrix>> pairs) {
  std::vector<EmpiricalPoint> out;
  out.reserve(pairs.size());
  for (const auto& [reference, estimate] : pairs) {
    out.push_back({reference.n(), error_summary(delta(reference, estimate))});
  }
  return out;
}

/// Sum consecutive blocks of `block` rows (boarding) or columns (alighting)
/// of the error matrix; a trailing remainder forms a smaller last block.
/// Returns the aggregated cells in row-major order.
inline std::vector<double> aggregate_delta(const DeltaMatrix& d, std::size_t block, Side side) {
  const std::size_t n = d.n();
  if (block < 1 || block > n) {
    fail(ErrorCode::invalid_argument,
         "aggregation size must be in [1, " + std::to_string(n) + "], got " + std::to_string(block));
  }
  const std::size_t groups = (n + block - 1) / block;
  std::vector<double> out(groups * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < n; ++o) {
      if (side == Side::boarding) {
        out[(i / block) * n + o] += d(i, o);
      } else {
        out[i * groups + o / block] += d(i, o);
      }
    }
  }
  return out;
}

/// RMS error per entry of the aggregated error matrix.
inline double aggregated_err_od(const DeltaMatrix& d, std::size_t block, Side side) {
  const auto cells = aggregate_delta(d, block, side);
  return detail::rms(cells, static_cast<double>(cells.size()));
}

inline double aggregate_and_score(const ShareMatrix& reference, const ShareMatrix& estimate, std::size_t block,
                                  Side side) {
  return aggregated_err_od(delta(reference, estimate), block, side);
}

struct AggregationEntry {
  std::size_t block = 1;
  Side side = Side::boarding;
  double err_od = 0.0;
};

struct AggregationResult {
  double baseline_err_od = 0.0;  // n = 1
  std::vector<AggregationEntry> entries;
};

/// err_od for every size in `blocks` on both sides.
inline AggregationResult run_aggregation(const ShareMatrix& reference, const ShareMatrix& estimate,
                                         std::span<const std::size_t> blocks) {
  const DeltaMatrix d = delta(reference, estimate);
  AggregationResult result;
  result.baseline_err_od = error_summary(d).err_od;
  for (std::size_t b : blocks) {
    for (Side side : {Side::boarding, Side::alighting}) {
      result.entries.push_back({b, side, aggregated_err_od(d, b, side)});
    }
  }
  return result;
}

}  // namespace odnoise
