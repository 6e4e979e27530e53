// Perturb a synthetic matrix, measure its errors, then predict the O-D error
// of a 22-stop line from a fitted ratio curve.

#include <cstdio>

#include "odnoise/odnoise.hpp"

using namespace odnoise;

int main() {
  NoiseTerm boarding{NoiseKind::boarding, 0.03};
  NoiseTerm alighting{NoiseKind::alighting, 0.045};
  NoiseTerm additive{NoiseKind::additive, 0.1};
  const NoiseSpec spec{{boarding, alighting, additive}, false, 2024};

  const auto ref = generate_uniform(27, 7);
  const auto out = apply(spec, ref);
  const auto s = error_summary(out.realization.delta);
  std::printf("N=27  err_od=%.5f  err_in=%.5f  err_out=%.5f  ratio_in=%.2f  ratio_out=%.2f\n", s.err_od, s.err_in,
              s.err_out, *s.ratio_in, *s.ratio_out);

  SweepConfig sweep;
  sweep.spec = spec;
  const auto result = run_sweep(sweep);
  std::vector<CurvePoint> curve;
  for (const auto& p : result.points) curve.push_back({static_cast<double>(p.n), p.ratio_in_mean});
  const auto model = fit_lowess(curve);

  const double count_error = 0.018;
  std::printf("N=22  ratio_in=%.2f  inferred err_od=%.5f for boarding count error %.3f\n", predict_ratio(model, 22),
              infer_od_error(model, 22, count_error), count_error);
}
