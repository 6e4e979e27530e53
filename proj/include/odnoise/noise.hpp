#pragma once

// Synthetic noise models for O-D share estimates.
//
// Every model draws raw noise xi and subtracts a normalization constant Z so
// that the perturbation sums to zero:
//
//   additive        xi_io                      Z = mean over all N^2 cells
//   multiplicative  xi_io * T_io               Z = mean over all N^2 cells
//   short_od        xi_io * [|i-o| <= r]       Z = masked sum / N^2
//   central_od      xi_io * 1c(i) * 1c(o)      Z = masked sum / N^2
//   boarding        xi_i   (constant per row)  Z = mean over N stops
//   alighting       xi_o   (constant per col)  Z = mean over N stops
//
// Terms combine additively; `apply` then optionally clamps negative shares.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "odnoise/error.hpp"
#include "odnoise/od_core.hpp"
#include "odnoise/rng.hpp"

namespace odnoise {

enum class NoiseKind { additive, multiplicative, short_od, central_od, boarding, alighting };
enum class Distribution { uniform_symmetric, gaussian };

inline std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::additive: return "additive";
    case NoiseKind::multiplicative: return "multiplicative";
    case NoiseKind::short_od: return "short_od";
    case NoiseKind::central_od: return "central_od";
    case NoiseKind::boarding: return "boarding";
    case NoiseKind::alighting: return "alighting";
  }
  return "?";
}

inline std::string_view to_string(Distribution d) {
  return d == Distribution::gaussian ? "gaussian" : "uniform_symmetric";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  for (auto k : {NoiseKind::additive, NoiseKind::multiplicative, NoiseKind::short_od, NoiseKind::central_od,
                 NoiseKind::boarding, NoiseKind::alighting}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::parse_error, "unknown noise kind '" + std::string(s) + "'");
}

inline Distribution parse_distribution(std::string_view s) {
  if (s == "uniform_symmetric" || s == "uniform") return Distribution::uniform_symmetric;
  if (s == "gaussian") return Distribution::gaussian;
  fail(ErrorCode::parse_error, "unknown distribution '" + std::string(s) + "'");
}

struct CentralBand {
  double lo = 1.0 / 8.0;
  double hi = 3.0 / 8.0;
};

struct NoiseTerm {
  NoiseKind kind = NoiseKind::additive;
  double amplitude = 0.1;
  Distribution distribution = Distribution::uniform_symmetric;
  int short_radius = 2;         // short_od only
  bool positive_only = false;   // short_od only: use |xi|
  CentralBand central_band{};   // central_od only
};

struct NoiseSpec {
  std::vector<NoiseTerm> terms;
  bool clamped = false;
  std::uint64_t seed = 0;
};

struct NoiseRealization {
  DeltaMatrix delta;
  std::size_t clamp_events = 0;
  std::uint64_t seed_used = 0;
};

inline constexpr int kMaxClampIterations = 100;

inline void validate(const NoiseTerm& term) {
  if (!(term.amplitude > 0.0) || !std::isfinite(term.amplitude)) {
    fail(ErrorCode::invalid_argument, "noise amplitude must be > 0, got " + std::to_string(term.amplitude));
  }
  if (term.short_radius < 0) fail(ErrorCode::invalid_argument, "short_radius must be >= 0");
  const auto& b = term.central_band;
  if (!(0.0 <= b.lo && b.lo < b.hi && b.hi <= 1.0)) {
    fail(ErrorCode::invalid_argument, "central band must satisfy 0 <= lo < hi <= 1");
  }
}

inline void validate(const NoiseSpec& spec) {
  if (spec.terms.empty()) fail(ErrorCode::invalid_argument, "noise spec has no terms");
  for (const auto& t : spec.terms) validate(t);
}

namespace detail {

inline double draw_xi(Rng& rng, double sigma, Distribution dist) {
  if (dist == Distribution::gaussian) return std::normal_distribution<double>(0.0, sigma)(rng);
  return std::uniform_real_distribution<double>(-sigma, sigma)(rng);
}

/// Subtract sum(raw) / count from every cell and wrap as a DeltaMatrix.
inline DeltaMatrix recentre(std::size_t n, std::vector<double> raw) {
  const double z = stable_sum(raw) / static_cast<double>(raw.size());
  for (double& v : raw) v -= z;
  return DeltaMatrix(n, std::move(raw));
}

inline void require_amplitude(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::invalid_argument, "noise amplitude must be > 0, got " + std::to_string(sigma));
  }
}

}  // namespace detail

inline DeltaMatrix draw_additive(const ShareMatrix& ref, double sigma, Distribution dist, Rng& rng) {
  detail::require_amplitude(sigma);
  std::vector<double> raw(ref.n() * ref.n());
  for (double& v : raw) v = detail::draw_xi(rng, sigma, dist);
  return detail::recentre(ref.n(), std::move(raw));
}

inline DeltaMatrix draw_multiplicative(const ShareMatrix& ref, double sigma, Distribution dist, Rng& rng) {
  detail::require_amplitude(sigma);
  std::vector<double> raw(ref.n() * ref.n());
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = detail::draw_xi(rng, sigma, dist) * ref.values()[k];
  return detail::recentre(ref.n(), std::move(raw));
}

/// 0-based indices i with ceil(lo*N) <= i+1 <= floor(hi*N).
inline std::vector<std::size_t> central_stops(std::size_t n, CentralBand band) {
  const auto nd = static_cast<double>(n);
  const auto first = std::max<long long>(1, static_cast<long long>(std::ceil(band.lo * nd)));
  const auto last = std::min<long long>(static_cast<long long>(n), static_cast<long long>(std::floor(band.hi * nd)));
  std::vector<std::size_t> out;
  for (long long label = first; label <= last; ++label) out.push_back(static_cast<std::size_t>(label - 1));
  return out;
}

/// Row-major cell mask selected by a short_od or central_od term.
inline std::vector<bool> structure_mask(std::size_t n, const NoiseTerm& term) {
  std::vector<bool> mask(n * n, false);
  if (term.kind == NoiseKind::short_od) {
    if (static_cast<std::size_t>(term.short_radius) >= n) {
      fail(ErrorCode::invalid_argument, "short_radius " + std::to_string(term.short_radius) +
                                            " must be < N=" + std::to_string(n));
    }
    const auto r = static_cast<std::size_t>(term.short_radius);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < n; ++o) mask[i * n + o] = (i > o ? i - o : o - i) <= r;
    }
  } else if (term.kind == NoiseKind::central_od) {
    const auto stops = central_stops(n, term.central_band);
    if (stops.empty()) {
      fail(ErrorCode::empty_mask, "central band [" + std::to_string(term.central_band.lo) + ", " +
                                      std::to_string(term.central_band.hi) + "] selects no stop for N=" +
                                      std::to_string(n));
    }
    for (auto i : stops) {
      for (auto o : stops) mask[i * n + o] = true;
    }
  } else {
    fail(ErrorCode::invalid_argument, "structure_mask called for a non-structured noise kind");
  }
  return mask;
}

/// Noise on the cells of a short_od or central_od mask; Z averages over all
/// N^2 cells so unmasked cells carry -Z.
inline DeltaMatrix draw_structured(const ShareMatrix& ref, const NoiseTerm& term, Rng& rng) {
  detail::require_amplitude(term.amplitude);
  const auto mask = structure_mask(ref.n(), term);
  std::vector<double> raw(mask.size(), 0.0);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (!mask[k]) continue;
    double xi = detail::draw_xi(rng, term.amplitude, term.distribution);
    if (term.kind == NoiseKind::short_od && term.positive_only) xi = std::abs(xi);
    raw[k] = xi;
  }
  return detail::recentre(ref.n(), std::move(raw));
}

/// Uncertainty on the boarding (row-constant) or alighting (column-constant) stop.
inline DeltaMatrix draw_marginal(const ShareMatrix& ref, NoiseKind side, double sigma, Rng& rng,
                                 Distribution dist = Distribution::uniform_symmetric) {
  detail::require_amplitude(sigma);
  if (side != NoiseKind::boarding && side != NoiseKind::alighting) {
    fail(ErrorCode::invalid_argument, "draw_marginal needs side boarding or alighting");
  }
  const std::size_t n = ref.n();
  std::vector<double> xi(n);
  for (double& v : xi) v = detail::draw_xi(rng, sigma, dist);
  const double z = detail::stable_sum(xi) / static_cast<double>(n);
  for (double& v : xi) v -= z;
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < n; ++o) d[i * n + o] = side == NoiseKind::boarding ? xi[i] : xi[o];
  }
  return DeltaMatrix(n, std::move(d));
}

inline DeltaMatrix draw_term(const ShareMatrix& ref, const NoiseTerm& term, Rng& rng) {
  switch (term.kind) {
    case NoiseKind::additive: return draw_additive(ref, term.amplitude, term.distribution, rng);
    case NoiseKind::multiplicative: return draw_multiplicative(ref, term.amplitude, term.distribution, rng);
    case NoiseKind::short_od:
    case NoiseKind::central_od: return draw_structured(ref, term, rng);
    case NoiseKind::boarding:
    case NoiseKind::alighting: return draw_marginal(ref, term.kind, term.amplitude, rng, term.distribution);
  }
  fail(ErrorCode::internal, "unhandled noise kind");
}

/// Set negative shares to zero and take the deficit uniformly off the strictly
/// positive shares until nothing is negative. Returns the number of cells zeroed.
inline std::size_t clamp_shares(std::vector<double>& shares) {
  std::size_t events = 0;
  for (int iter = 0; iter < kMaxClampIterations; ++iter) {
    double deficit = 0.0;
    std::size_t positive = 0;
    for (double& v : shares) {
      if (v < 0.0) {
        deficit -= v;
        v = 0.0;
        ++events;
      } else if (v > 0.0) {
        ++positive;
      }
    }
    if (deficit == 0.0) return events;
    if (positive == 0) fail(ErrorCode::clamp_diverged, "clamping left no positive share to absorb the deficit");
    const double cut = deficit / static_cast<double>(positive);
    for (double& v : shares) {
      if (v > 0.0) v -= cut;
    }
  }
  for (double v : shares) {
    if (v < 0.0) {
      fail(ErrorCode::clamp_diverged,
           "clamping did not converge within " + std::to_string(kMaxClampIterations) + " iterations");
    }
  }
  return events;
}

struct Perturbed {
  ShareMatrix estimate;
  NoiseRealization realization;
};

/// Perturb a reference matrix with the sum of the spec's terms.
///
/// All terms draw from one generator seeded with `spec.seed`, in spec order.
/// The result is renormalized to sum to one: by scaling when clamped (keeps
/// cells nonnegative), by a uniform shift otherwise (keeps row/column-constant
/// structure intact).
inline Perturbed apply(const NoiseSpec& spec, const ShareMatrix& ref) {
  validate(spec);
  Rng rng(spec.seed);
  const std::size_t n = ref.n();
  std::vector<double> shares(ref.values().begin(), ref.values().end());
  for (const auto& term : spec.terms) {
    const DeltaMatrix d = draw_term(ref, term, rng);
    for (std::size_t k = 0; k < shares.size(); ++k) shares[k] += d.values()[k];
  }

  std::size_t events = 0;
  if (spec.clamped) {
    events = clamp_shares(shares);
    const double sum = detail::stable_sum(shares);
    if (!(sum > 0.0)) fail(ErrorCode::clamp_diverged, "clamped matrix has no mass left");
    for (double& v : shares) v /= sum;
  } else {
    const double shift = (detail::stable_sum(shares) - 1.0) / static_cast<double>(shares.size());
    for (double& v : shares) v -= shift;
  }

  ShareMatrix estimate(n, std::move(shares), ref.labels(),
                       spec.clamped ? EntryPolicy::nonnegative : EntryPolicy::signed_estimate);
  DeltaMatrix d = delta(ref, estimate);
  return {std::move(estimate), NoiseRealization{std::move(d), events, spec.seed}};
}

}  // namespace odnoise
