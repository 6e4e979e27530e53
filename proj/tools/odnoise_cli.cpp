// odnoise: command-line front end.
//
//   odnoise generate  --n 27 --seed 1 --out ref.csv
//   odnoise perturb   --ref ref.csv --spec run.json --out est.csv
//   odnoise metrics   --ref ref.csv --est est.csv [--counts counts.csv]
//   odnoise sweep     --spec run.json --out sweep.csv
//   odnoise fit       --in sweep.csv --frac 0.2 --side boarding --out model.csv
//   odnoise infer     --model model.csv --n 22 --count-error 0.014
//   odnoise aggregate --ref ref.csv --est est.csv --n 3 --side alighting
//   odnoise report    --sweep sweep.csv [--empirical points.csv] --out plot.svg
//
// Errors print a single "error: <code>: <message>" line and exit nonzero.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11/CLI11.hpp>

#include "odnoise/odnoise.hpp"

namespace {

using namespace odnoise;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("OD_NOISE_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_argument, "OD_NOISE_SEED is not an unsigned integer");
  }
}

/// --seed, then the config's seed, then OD_NOISE_SEED; no unseeded path.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (auto env = env_seed()) return *env;
  fail(ErrorCode::invalid_argument, "no seed: pass --seed, set spec.seed, or set OD_NOISE_SEED");
}

void emit(const std::optional<std::string>& path, const std::string& content) {
  if (path) {
    io::write_file_atomic(*path, content);
  } else {
    std::cout << content;
  }
}

struct Options {
  std::optional<std::uint64_t> seed;
  std::size_t n = 0;
  std::string ref, est, spec, counts, in, model, sweep, empirical, label, side = "boarding";
  std::optional<std::string> out;
  double frac = 0.2;
  double n_query = 0.0;
  double count_error = 0.0;
  bool all_sizes = false;
};

int cmd_generate(const Options& o) {
  if (o.n < 2) fail(ErrorCode::invalid_argument, "--n must be >= 2");
  const auto m = generate_uniform(o.n, resolve_seed(o.seed, std::nullopt));
  emit(o.out, io::matrix_to_csv(m));
  return 0;
}

int cmd_perturb(const Options& o) {
  const auto loaded = io::load_matrix(o.ref);
  warn(loaded.warnings);
  const auto config = io::load_run_config(o.spec);
  NoiseSpec spec = config.spec.spec;
  spec.seed = resolve_seed(o.seed, config.spec.seed);
  const auto result = apply(spec, loaded.matrix);
  if (result.realization.clamp_events > 0) {
    std::cerr << "info: " << result.realization.clamp_events << " cells clamped\n";
  }
  emit(o.out, io::matrix_to_csv(result.estimate));
  return 0;
}

int cmd_metrics(const Options& o) {
  const auto ref = io::load_matrix(o.ref);
  const auto est = io::load_matrix(o.est);
  warn(ref.warnings);
  warn(est.warnings);
  ErrorSummary s;
  if (!o.counts.empty()) {
    const auto counts = io::align_counts(io::load_counts(o.counts), est.matrix);
    s = error_summary(ref.matrix, est.matrix, counts);
  } else {
    s = error_summary(delta(ref.matrix, est.matrix));
  }
  const std::string label = o.label.empty() ? std::filesystem::path(o.est).stem().string() : o.label;
  const std::string csv = std::string(io::kMetricsHeader) + "\n" + io::metrics_row(label, ref.matrix.n(), s) + "\n";
  std::cout << csv;
  if (o.out) io::write_file_atomic(*o.out, csv);
  return 0;
}

int cmd_sweep(const Options& o) {
  auto rc = io::load_run_config(o.spec);
  const auto master = resolve_seed(o.seed, rc.spec.seed);
  rc.sweep.spec.seed = master;
  if (rc.provided_reference_path) {
    std::filesystem::path ref_path = *rc.provided_reference_path;
    if (ref_path.is_relative()) ref_path = std::filesystem::path(o.spec).parent_path() / ref_path;
    const auto loaded = io::load_matrix(ref_path);
    warn(loaded.warnings);
    rc.sweep.reference = loaded.matrix;
  }
  const auto result = run_sweep(rc.sweep);
  const auto out = o.out ? o.out : rc.output.sweep_csv;
  emit(out, io::sweep_to_csv(result));
  if (rc.output.replicates_csv) io::write_file_atomic(*rc.output.replicates_csv, io::replicates_to_csv(result));
  return 0;
}

int cmd_fit(const Options& o) {
  const Side side = parse_side(o.side);
  const auto rows = io::parse_sweep_csv(io::read_file(o.in));
  std::vector<CurvePoint> pts;
  for (const auto& r : rows) pts.push_back({r.n, side == Side::boarding ? r.ratio_in : r.ratio_out});
  emit(o.out, io::model_to_csv(fit_lowess(pts, o.frac, side)));
  return 0;
}

int cmd_infer(const Options& o) {
  const auto model = io::parse_model_csv(io::read_file(o.model));
  const double ratio = predict_ratio(model, o.n_query);
  const double err = infer_od_error(model, o.n_query, o.count_error);
  std::cout << "n,side,ratio,count_error,err_od\n"
            << io::format_double(o.n_query) << "," << to_string(model.side) << "," << io::format_double(ratio) << ","
            << io::format_double(o.count_error) << "," << io::format_double(err) << "\n";
  return 0;
}

int cmd_aggregate(const Options& o) {
  const auto ref = io::load_matrix(o.ref);
  const auto est = io::load_matrix(o.est);
  warn(ref.warnings);
  warn(est.warnings);
  std::string csv;
  if (o.all_sizes) {
    if (o.n < 1 || o.n > ref.matrix.n()) fail(ErrorCode::invalid_argument, "--n must be in [1, N]");
    std::vector<std::size_t> sizes;
    for (std::size_t b = 1; b <= o.n; ++b) sizes.push_back(b);
    csv = io::aggregation_to_csv(run_aggregation(ref.matrix, est.matrix, sizes));
  } else {
    const Side side = parse_side(o.side);
    const double err = aggregate_and_score(ref.matrix, est.matrix, o.n, side);
    csv = "n,side,err_od\n" + std::to_string(o.n) + "," + to_string(side) + "," + io::format_double(err) + "\n";
  }
  std::cout << csv;
  if (o.out) io::write_file_atomic(*o.out, csv);
  return 0;
}

int cmd_report(const Options& o) {
  if (!o.out) fail(ErrorCode::invalid_argument, "--out is required");
  report::PlotData data;
  try {
    data.sweep = io::parse_sweep_csv(io::read_file(o.sweep));
  } catch (const Error& e) {
    throw Error(e.code(), o.sweep + ": " + e.what());
  }
  if (!o.empirical.empty()) {
    try {
      data.empirical = io::parse_empirical_csv(io::read_file(o.empirical));
    } catch (const Error& e) {
      throw Error(e.code(), o.empirical + ": " + e.what());
    }
  }
  std::filesystem::path out = *o.out;
  if (out.extension() == ".svg") {
    io::write_file_atomic(out, report::plot_svg(data));
    out.replace_extension(".csv");
  }
  io::write_file_atomic(out, report::plot_data_csv(data));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise models and error-ratio analysis for stop-to-stop O-D share matrices", "odnoise"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write a synthetic uniform reference matrix");
  generate->add_option("--n", o.n, "number of stops")->required();
  generate->add_option("--seed", o.seed, "random seed");
  generate->add_option("--out", o.out, "output CSV (stdout if omitted)");

  auto* perturb = app.add_subcommand("perturb", "Apply a noise spec to a reference matrix");
  perturb->add_option("--ref", o.ref, "reference matrix CSV")->required();
  perturb->add_option("--spec", o.spec, "JSON run config holding the noise spec")->required();
  perturb->add_option("--seed", o.seed, "random seed (overrides spec.seed)");
  perturb->add_option("--out", o.out, "output CSV (stdout if omitted)");

  auto* metrics = app.add_subcommand("metrics", "O-D, boarding and alighting errors and their ratios");
  metrics->add_option("--ref", o.ref, "reference matrix CSV")->required();
  metrics->add_option("--est", o.est, "estimated matrix CSV")->required();
  metrics->add_option("--counts", o.counts, "boarding/alighting share CSV used as marginal baseline");
  metrics->add_option("--label", o.label, "label for the output row (default: estimate file stem)");
  metrics->add_option("--out", o.out, "also write the CSV here");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep of error ratios over N");
  sweep->add_option("--spec", o.spec, "JSON run config")->required();
  sweep->add_option("--seed", o.seed, "master seed (overrides spec.seed)");
  sweep->add_option("--out", o.out, "sweep CSV (default: output.sweep_csv or stdout)");

  auto* fit = app.add_subcommand("fit", "Lowess fit of a sweep's ratio curve");
  fit->add_option("--in", o.in, "sweep CSV")->required();
  fit->add_option("--frac", o.frac, "smoothing fraction in (0, 1]")->capture_default_str();
  fit->add_option("--side", o.side, "boarding or alighting")->capture_default_str();
  fit->add_option("--out", o.out, "model CSV (stdout if omitted)");

  auto* infer = app.add_subcommand("infer", "Estimate the O-D error from a count error");
  infer->add_option("--model", o.model, "model CSV from `fit`")->required();
  infer->add_option("--n", o.n_query, "number of stops")->required();
  infer->add_option("--count-error", o.count_error, "Err(in) or Err(out), matching the model side")->required();

  auto* aggregate = app.add_subcommand("aggregate", "O-D error after bundling consecutive stops");
  aggregate->add_option("--ref", o.ref, "reference matrix CSV")->required();
  aggregate->add_option("--est", o.est, "estimated matrix CSV")->required();
  aggregate->add_option("--n", o.n, "stops per aggregate")->required();
  aggregate->add_option("--side", o.side, "boarding or alighting")->capture_default_str();
  aggregate->add_flag("--all", o.all_sizes, "report sizes 1..n on both sides");
  aggregate->add_option("--out", o.out, "also write the CSV here");

  auto* report_cmd = app.add_subcommand("report", "Plot data CSV and optional SVG scatter");
  report_cmd->add_option("--sweep", o.sweep, "sweep CSV")->required();
  report_cmd->add_option("--empirical", o.empirical, "CSV with n, ratio_in, ratio_out columns");
  report_cmd->add_option("--out", o.out, "output .svg (plus sibling .csv) or .csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: usage: " << msg << "\n";
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (perturb->parsed()) return cmd_perturb(o);
    if (metrics->parsed()) return cmd_metrics(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (fit->parsed()) return cmd_fit(o);
    if (infer->parsed()) return cmd_infer(o);
    if (aggregate->parsed()) return cmd_aggregate(o);
    if (report_cmd->parsed()) return cmd_report(o);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    const bool usage = e.code() == ErrorCode::invalid_argument;
    std::cerr << "error: " << code_name(e.code()) << ": " << msg << "\n";
    return usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
