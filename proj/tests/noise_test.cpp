#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "odnoise/noise.hpp"
#include "odnoise/synth.hpp"

using namespace odnoise;

namespace {

double sample_variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

ShareMatrix flat(std::size_t n) {
  return ShareMatrix(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n * n)));
}

NoiseTerm term(NoiseKind kind, double sigma) {
  NoiseTerm t;
  t.kind = kind;
  t.amplitude = sigma;
  return t;
}

}  // namespace

TEST(Additive, VanishingAmplitudeGivesVanishingDelta) {
  Rng rng(1);
  const auto d = draw_additive(generate_uniform(5, 1), 1e-300, Distribution::uniform_symmetric, rng);
  for (double v : d.values()) EXPECT_LE(std::abs(v), 1e-299);
}

TEST(Additive, RecentredToZeroMean) {
  Rng rng(42);
  const auto d = draw_additive(generate_uniform(3, 2), 0.1, Distribution::uniform_symmetric, rng);
  EXPECT_NEAR(d.total() / 9.0, 0.0, 1e-12);
}

TEST(Additive, EntryVarianceMatchesRecentredUniform) {
  // Var(xi - mean xi) = sigma^2 / 3 * (1 - 1/N^2)
  const std::size_t n = 50;
  const double sigma = 0.1;
  const auto ref = generate_uniform(n, 3);
  Rng rng(777);
  std::vector<double> first, last;
  for (int k = 0; k < 10000; ++k) {
    const auto d = draw_additive(ref, sigma, Distribution::uniform_symmetric, rng);
    first.push_back(d(0, 0));
    last.push_back(d(n - 1, n - 1));
  }
  const double expected = sigma * sigma / 3.0 * (1.0 - 1.0 / (n * n));
  EXPECT_NEAR(sample_variance(first) / expected, 1.0, 0.03);
  EXPECT_NEAR(sample_variance(last) / expected, 1.0, 0.03);
}

TEST(Additive, GaussianVariance) {
  const auto ref = generate_uniform(10, 3);
  Rng rng(778);
  std::vector<double> xs;
  for (int k = 0; k < 10000; ++k) xs.push_back(draw_additive(ref, 0.1, Distribution::gaussian, rng)(3, 4));
  EXPECT_NEAR(sample_variance(xs) / (0.01 * (1.0 - 1.0 / 100.0)), 1.0, 0.05);
}

TEST(Multiplicative, ZeroRowOnlyCarriesTheRecentringConstant) {
  std::vector<double> v(16, 1.0 / 12.0);
  for (std::size_t o = 0; o < 4; ++o) v[2 * 4 + o] = 0.0;
  const ShareMatrix ref(4, v);
  Rng rng(5);
  const auto d = draw_multiplicative(ref, 0.5, Distribution::uniform_symmetric, rng);
  const double z = -d(2, 0);
  for (std::size_t o = 1; o < 4; ++o) EXPECT_DOUBLE_EQ(d(2, o), -z);
  EXPECT_NEAR(d.total(), 0.0, 1e-12);
}

TEST(Multiplicative, FlatReferenceMatchesScaledAdditiveVariance) {
  const std::size_t n = 6;
  const double sigma = 0.3;
  const double nn = static_cast<double>(n * n);
  const auto ref = flat(n);
  Rng rng_m(11), rng_a(12);
  std::vector<double> mult, add;
  for (int k = 0; k < 10000; ++k) {
    mult.push_back(draw_multiplicative(ref, sigma, Distribution::uniform_symmetric, rng_m)(1, 2));
    add.push_back(draw_additive(ref, sigma / nn, Distribution::uniform_symmetric, rng_a)(1, 2));
  }
  EXPECT_NEAR(sample_variance(mult) / sample_variance(add), 1.0, 0.05);
}

TEST(Multiplicative, FixedSeedSumsToZero) {
  Rng rng(3);
  const auto d = draw_multiplicative(generate_uniform(3, 9), 0.1, Distribution::uniform_symmetric, rng);
  EXPECT_NEAR(d.total(), 0.0, 1e-12);
}

TEST(Structured, ShortOdMaskCountsBand) {
  const auto t = term(NoiseKind::short_od, 0.1);
  const auto mask = structure_mask(10, t);
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 10 + 2 * 9 + 2 * 8);

  Rng rng(8);
  const auto d = draw_structured(generate_uniform(10, 1), t, rng);
  std::set<double> unmasked;
  std::size_t distinct_masked = 0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) {
      ++distinct_masked;
    } else {
      unmasked.insert(d.values()[k]);
    }
  }
  EXPECT_EQ(distinct_masked, 44u);
  EXPECT_EQ(unmasked.size(), 1u);  // every unmasked cell is -Z
}

TEST(Structured, CentralBandIndicesForSixteenStops) {
  // 1-based labels ceil(16/8)=2 .. floor(48/8)=6
  const auto stops = central_stops(16, CentralBand{});
  EXPECT_EQ(stops, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  const auto mask = structure_mask(16, term(NoiseKind::central_od, 0.1));
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 25);
}

TEST(Structured, EmptyCentralBandIsAnError) {
  Rng rng(1);
  try {
    draw_structured(generate_uniform(2, 1), term(NoiseKind::central_od, 0.1), rng);
    FAIL() << "expected empty_mask";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_mask);
  }
}

TEST(Structured, ShortRadiusMustBeBelowN) {
  auto t = term(NoiseKind::short_od, 0.1);
  t.short_radius = 4;
  Rng rng(1);
  EXPECT_THROW(draw_structured(generate_uniform(4, 1), t, rng), Error);
  t.short_radius = 3;
  EXPECT_NO_THROW(draw_structured(generate_uniform(4, 1), t, rng));
}

TEST(Structured, PositiveOnlyShortNoiseIsNonnegativeBeforeRecentring) {
  auto t = term(NoiseKind::short_od, 0.1);
  t.positive_only = true;
  Rng rng(13);
  const auto d = draw_structured(generate_uniform(12, 1), t, rng);
  const auto mask = structure_mask(12, t);
  const double minus_z = d(0, 11);  // unmasked
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) {
      EXPECT_GE(d.values()[k], minus_z);
    }
  }
}

TEST(Structured, VanishingAmplitude) {
  Rng rng(2);
  const auto d = draw_structured(generate_uniform(16, 1), term(NoiseKind::central_od, 1e-300), rng);
  for (double v : d.values()) EXPECT_LE(std::abs(v), 1e-299);
}

TEST(Marginal, BoardingNoiseIdentities) {
  Rng rng(99);
  for (std::size_t n : {2u, 5u, 27u, 64u}) {
    const auto d = draw_marginal(generate_uniform(n, n), NoiseKind::boarding, 0.03, rng);
    EXPECT_NEAR(d.total(), 0.0, 1e-12);
    for (double c : d.column_sums()) EXPECT_LE(std::abs(c), 1e-12);
    const auto s = error_summary(d);
    EXPECT_LE(s.err_out, 1e-12);
    EXPECT_NEAR(*s.ratio_in / static_cast<double>(n), 1.0, 1e-9);
  }
}

TEST(Marginal, AlightingNoiseMirrors) {
  Rng rng(100);
  for (std::size_t n : {2u, 5u, 27u, 64u}) {
    const auto d = draw_marginal(generate_uniform(n, n), NoiseKind::alighting, 0.045, rng);
    const auto s = error_summary(d);
    EXPECT_LE(s.err_in, 1e-12);
    EXPECT_NEAR(*s.ratio_out / static_cast<double>(n), 1.0, 1e-9);
  }
}

TEST(Marginal, RejectsNonMarginalSide) {
  Rng rng(1);
  EXPECT_THROW(draw_marginal(generate_uniform(3, 1), NoiseKind::additive, 0.1, rng), Error);
}

TEST(ClampShares, RedistributesDeficitOverPositiveCells) {
  std::vector<double> v{0.5, 0.6, -0.1, 0.0};
  EXPECT_EQ(clamp_shares(v), 1u);
  EXPECT_NEAR(v[0], 0.45, 1e-15);
  EXPECT_NEAR(v[1], 0.55, 1e-15);
  EXPECT_EQ(v[2], 0.0);
  EXPECT_EQ(v[3], 0.0);
}

TEST(ClampShares, IteratesUntilNothingIsNegative) {
  // first pass pushes the 0.01 cell negative
  std::vector<double> v{0.01, 0.49, 0.8, -0.3};
  clamp_shares(v);
  for (double x : v) EXPECT_GE(x, 0.0);
  EXPECT_NEAR(v[0] + v[1] + v[2] + v[3], 1.0, 1e-15);
  EXPECT_EQ(v[0], 0.0);
}

TEST(ClampShares, FailsWithoutPositiveMass) {
  std::vector<double> v{-0.5, -0.5, 0.0};
  try {
    clamp_shares(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::clamp_diverged);
  }
}

TEST(Apply, VanishingNoiseReturnsReference) {
  const auto ref = generate_uniform(8, 4);
  NoiseSpec spec{{term(NoiseKind::additive, 1e-300), term(NoiseKind::boarding, 1e-300)}, false, 3};
  const auto out = apply(spec, ref);
  for (std::size_t k = 0; k < ref.values().size(); ++k) EXPECT_NEAR(out.estimate.values()[k], ref.values()[k], 1e-12);
}

TEST(Apply, SameSeedIsBitIdentical) {
  const auto ref = generate_uniform(20, 4);
  NoiseSpec spec{{term(NoiseKind::additive, 0.1), term(NoiseKind::short_od, 0.05)}, true, 123};
  const auto a = apply(spec, ref);
  const auto b = apply(spec, ref);
  ASSERT_EQ(a.estimate.values().size(), b.estimate.values().size());
  for (std::size_t k = 0; k < a.estimate.values().size(); ++k) EXPECT_EQ(a.estimate.values()[k], b.estimate.values()[k]);
  EXPECT_EQ(a.realization.clamp_events, b.realization.clamp_events);
  spec.seed = 124;
  EXPECT_NE(apply(spec, ref).estimate.values()[0], a.estimate.values()[0]);
}

TEST(Apply, CompositeSpecIsConstructible) {
  NoiseSpec spec{{term(NoiseKind::boarding, 0.03), term(NoiseKind::alighting, 0.045), term(NoiseKind::additive, 0.1)},
                 false, 9};
  const auto ref = generate_uniform(27, 1);
  const auto out = apply(spec, ref);
  EXPECT_NEAR(out.estimate.total(), 1.0, kShareSumTolerance);
  EXPECT_EQ(out.realization.seed_used, 9u);
  EXPECT_EQ(out.estimate.policy(), EntryPolicy::signed_estimate);
}

TEST(Apply, ClampedOutputIsAProperShareMatrix) {
  for (auto kind : {NoiseKind::additive, NoiseKind::short_od, NoiseKind::central_od, NoiseKind::boarding}) {
    NoiseSpec spec{{term(kind, 0.1)}, true, 17};
    const auto out = apply(spec, generate_uniform(30, 2));
    EXPECT_GT(out.realization.clamp_events, 0u);
    for (double v : out.estimate.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(out.estimate.total(), 1.0, kShareSumTolerance);
    EXPECT_NEAR(out.realization.delta.total(), 0.0, kShareSumTolerance);
  }
}

TEST(Apply, RejectsInvalidSpecs) {
  const auto ref = generate_uniform(4, 1);
  EXPECT_THROW(apply(NoiseSpec{}, ref), Error);
  EXPECT_THROW(apply(NoiseSpec{{term(NoiseKind::additive, 0.0)}, false, 1}, ref), Error);
  auto bad_band = term(NoiseKind::central_od, 0.1);
  bad_band.central_band = {0.5, 0.4};
  EXPECT_THROW(apply(NoiseSpec{{bad_band}, false, 1}, ref), Error);
}

TEST(NoiseProperties, ConservationOverRandomSpecs) {
  Rng meta(4242);
  const NoiseKind kinds[] = {NoiseKind::additive,   NoiseKind::multiplicative, NoiseKind::short_od,
                             NoiseKind::central_od, NoiseKind::boarding,       NoiseKind::alighting};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 8 + meta() % 40;
    NoiseSpec spec;
    spec.clamped = meta() % 2 == 0;
    spec.seed = meta();
    const int terms = 1 + static_cast<int>(meta() % 3);
    for (int t = 0; t < terms; ++t) {
      NoiseTerm nt = term(kinds[meta() % 6], 0.001 + 0.1 * std::uniform_real_distribution<double>()(meta));
      nt.distribution = meta() % 2 ? Distribution::gaussian : Distribution::uniform_symmetric;
      spec.terms.push_back(nt);
    }
    const auto out = apply(spec, generate_uniform(n, meta()));
    EXPECT_NEAR(out.estimate.total(), 1.0, kShareSumTolerance);
    if (spec.clamped) {
      for (double v : out.estimate.values()) ASSERT_GE(v, 0.0);
    }
  }
}
