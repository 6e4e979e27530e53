#pragma once

// File formats: matrix and counts CSV, JSON run configs, sweep / model /
// metrics CSV. Layouts are documented in docs/formats.md.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "odnoise/error.hpp"
#include "odnoise/experiment.hpp"
#include "odnoise/noise.hpp"
#include "odnoise/od_core.hpp"
#include "odnoise/regress.hpp"

namespace odnoise::io {

using nlohmann::json;

// ---------------------------------------------------------------- numbers

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "null"; }

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || s.empty()) {
    fail(ErrorCode::parse_error, "line " + std::to_string(line) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

inline std::optional<double> parse_optional(std::string_view s, std::size_t line) {
  if (s == "null" || s.empty()) return std::nullopt;
  return parse_double(s, line);
}

// ---------------------------------------------------------------- files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write to a sibling temporary file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      fail(ErrorCode::io_error, "write to '" + path.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::io_error, "cannot move temporary file onto '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------- CSV

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Comment lines ('#') are kept apart; blank lines skipped.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<CsvRow> rows;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(trim(std::string_view(line).substr(1)));
      continue;
    }
    table.rows.push_back({line_no, split_csv_line(line, line_no)});
  }
  return table;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Header-driven view of a CSV table.
class Columns {
 public:
  Columns(const CsvTable& table, std::string_view what) : table_(table) {
    if (table.rows.empty()) fail(ErrorCode::parse_error, std::string(what) + ": missing header row");
    const auto& header = table.rows.front().fields;
    for (std::size_t k = 0; k < header.size(); ++k) index_[header[k]] = k;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
      if (table.rows[r].fields.size() != header.size()) {
        fail(ErrorCode::parse_error, "line " + std::to_string(table.rows[r].line) + ": expected " +
                                         std::to_string(header.size()) + " fields, got " +
                                         std::to_string(table.rows[r].fields.size()));
      }
    }
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t require(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorCode::parse_error, "line 1: missing column '" + name + "'");
    return it->second;
  }

  std::size_t size() const { return table_.rows.size() - 1; }
  const CsvRow& row(std::size_t r) const { return table_.rows[r + 1]; }

 private:
  const CsvTable& table_;
  std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------- matrices

struct LoadedMatrix {
  ShareMatrix matrix;
  std::vector<std::string> warnings;
};

/// Parse a matrix CSV: header row of stop labels (first cell is a corner
/// label), then one row per boarding stop led by its label.
///
/// Nonnegative matrices not summing to one are treated as trip counts and
/// normalized (with a warning). Matrices with negative cells must already sum
/// to one and load as signed estimates.
inline LoadedMatrix parse_matrix_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  if (table.rows.size() < 3) fail(ErrorCode::parse_error, "matrix CSV needs a header and at least 2 rows");
  const auto& header = table.rows.front().fields;
  const std::size_t n = header.size() - 1;
  if (table.rows.size() - 1 != n) {
    fail(ErrorCode::parse_error, "line " + std::to_string(table.rows.back().line) + ": matrix has " +
                                     std::to_string(n) + " columns but " + std::to_string(table.rows.size() - 1) +
                                     " rows");
  }
  std::vector<std::string> labels(header.begin() + 1, header.end());
  std::vector<double> cells;
  cells.reserve(n * n);
  for (std::size_t r = 1; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.fields.size() != n + 1) {
      fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": expected " + std::to_string(n + 1) +
                                       " fields, got " + std::to_string(row.fields.size()));
    }
    if (row.fields.front() != labels[r - 1]) {
      fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": row label '" + row.fields.front() +
                                       "' does not match column label '" + labels[r - 1] + "'");
    }
    for (std::size_t c = 1; c <= n; ++c) {
      const double v = parse_double(row.fields[c], row.line);
      if (!std::isfinite(v)) fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": non-finite cell");
      cells.push_back(v);
    }
  }

  LoadedMatrix loaded;
  const bool any_negative = std::any_of(cells.begin(), cells.end(), [](double v) { return v < 0.0; });
  const double sum = detail::stable_sum(cells);
  if (any_negative) {
    loaded.matrix = ShareMatrix(n, std::move(cells), std::move(labels), EntryPolicy::signed_estimate);
    loaded.warnings.push_back("matrix has negative cells; loaded as a signed estimate");
    return loaded;
  }
  if (!(sum > 0.0)) fail(ErrorCode::invalid_argument, "matrix has no positive cell");
  if (std::abs(sum - 1.0) > kShareSumTolerance) {
    for (double& v : cells) v /= sum;
    loaded.warnings.push_back("matrix sums to " + format_double(sum) + "; treated as counts and normalized");
  }
  loaded.matrix = ShareMatrix(n, std::move(cells), std::move(labels));
  return loaded;
}

inline LoadedMatrix load_matrix(const std::filesystem::path& path) {
  try {
    return parse_matrix_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline std::string matrix_to_csv(const ShareMatrix& m) {
  std::string out = "stop";
  for (std::size_t o = 0; o < m.n(); ++o) out += "," + csv_escape(m.label(o));
  out += "\n";
  for (std::size_t i = 0; i < m.n(); ++i) {
    out += csv_escape(m.label(i));
    for (std::size_t o = 0; o < m.n(); ++o) out += "," + format_double(m(i, o));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- counts

inline constexpr double kCountsSumTolerance = 1e-6;

/// Columns stop_label, boarding_share, alighting_share; each share column
/// must sum to one within 1e-6.
inline MarginalShares parse_counts_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const Columns cols(table, "counts CSV");
  const auto lab = cols.require("stop_label");
  const auto bin = cols.require("boarding_share");
  const auto bout = cols.require("alighting_share");
  MarginalShares counts;
  for (std::size_t r = 0; r < cols.size(); ++r) {
    const auto& row = cols.row(r);
    counts.labels.push_back(row.fields[lab]);
    counts.boarding.push_back(parse_double(row.fields[bin], row.line));
    counts.alighting.push_back(parse_double(row.fields[bout], row.line));
    if (counts.boarding.back() < 0.0 || counts.alighting.back() < 0.0) {
      fail(ErrorCode::invalid_argument, "line " + std::to_string(row.line) + ": negative share");
    }
  }
  if (counts.size() < 2) fail(ErrorCode::invalid_argument, "counts file needs at least 2 stops");
  for (const auto* column : {&counts.boarding, &counts.alighting}) {
    const double sum = detail::stable_sum(*column);
    if (std::abs(sum - 1.0) > kCountsSumTolerance) {
      fail(ErrorCode::invalid_argument, std::string(column == &counts.boarding ? "boarding" : "alighting") +
                                            "_share column sums to " + format_double(sum) + ", expected 1");
    }
  }
  return counts;
}

inline MarginalShares load_counts(const std::filesystem::path& path) {
  try {
    return parse_counts_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Reorder counts to follow the matrix's stop labels.
inline MarginalShares align_counts(const MarginalShares& counts, const ShareMatrix& m) {
  if (counts.size() != m.n()) {
    fail(ErrorCode::dimension_mismatch, "counts cover " + std::to_string(counts.size()) +
                                            " stops, matrix has N=" + std::to_string(m.n()));
  }
  MarginalShares out;
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto it = std::find(counts.labels.begin(), counts.labels.end(), m.label(i));
    if (it == counts.labels.end()) fail(ErrorCode::invalid_argument, "stop '" + m.label(i) + "' missing from counts");
    const auto k = static_cast<std::size_t>(it - counts.labels.begin());
    out.labels.push_back(counts.labels[k]);
    out.boarding.push_back(counts.boarding[k]);
    out.alighting.push_back(counts.alighting[k]);
  }
  return out;
}

// ---------------------------------------------------------------- JSON config

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  if (!obj.is_object()) fail(ErrorCode::parse_error, std::string(where) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail(ErrorCode::parse_error, std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, std::string(where) + ": key '" + key + "' is missing or has the wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, key, where);
}

}  // namespace detail

inline NoiseTerm term_from_json(const json& j) {
  constexpr std::string_view where = "noise term";
  detail::reject_unknown_keys(j, {"kind", "amplitude", "distribution", "short_radius", "positive_only", "central_band"},
                              where);
  NoiseTerm t;
  t.kind = parse_noise_kind(detail::get_as<std::string>(j, "kind", where));
  t.amplitude = detail::get_as<double>(j, "amplitude", where);
  t.distribution = parse_distribution(detail::get_or<std::string>(j, "distribution", "uniform_symmetric", where));
  t.short_radius = detail::get_or<int>(j, "short_radius", 2, where);
  t.positive_only = detail::get_or<bool>(j, "positive_only", false, where);
  if (j.contains("central_band")) {
    const auto band = detail::get_as<std::vector<double>>(j, "central_band", where);
    if (band.size() != 2) fail(ErrorCode::parse_error, "central_band must be [lo, hi]");
    t.central_band = {band[0], band[1]};
  }
  validate(t);
  return t;
}

inline json term_to_json(const NoiseTerm& t) {
  json j = {{"kind", to_string(t.kind)}, {"amplitude", t.amplitude}, {"distribution", to_string(t.distribution)}};
  if (t.kind == NoiseKind::short_od) {
    j["short_radius"] = t.short_radius;
    j["positive_only"] = t.positive_only;
  }
  if (t.kind == NoiseKind::central_od) j["central_band"] = {t.central_band.lo, t.central_band.hi};
  return j;
}

/// Parsed noise spec; `seed` stays empty when the document omits it.
struct ParsedSpec {
  NoiseSpec spec;
  std::optional<std::uint64_t> seed;
};

inline ParsedSpec spec_from_json(const json& j) {
  constexpr std::string_view where = "spec";
  detail::reject_unknown_keys(j, {"terms", "clamped", "seed"}, where);
  ParsedSpec out;
  if (!j.contains("terms") || !j.at("terms").is_array()) fail(ErrorCode::parse_error, "spec: 'terms' must be an array");
  for (const auto& t : j.at("terms")) out.spec.terms.push_back(term_from_json(t));
  out.spec.clamped = detail::get_or<bool>(j, "clamped", false, where);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail(ErrorCode::parse_error, "spec: seed must be a nonnegative integer");
    out.seed = j.at("seed").get<std::uint64_t>();
    out.spec.seed = *out.seed;
  }
  validate(out.spec);
  return out;
}

/// Canonical text form of a spec: compact JSON with sorted keys.
inline std::string spec_to_text(const NoiseSpec& spec) {
  json terms = json::array();
  for (const auto& t : spec.terms) terms.push_back(term_to_json(t));
  return json{{"terms", terms}, {"clamped", spec.clamped}, {"seed", spec.seed}}.dump();
}

struct OutputPaths {
  std::optional<std::string> sweep_csv;
  std::optional<std::string> replicates_csv;
};

/// JSON run configuration: {"spec": ..., "sweep": ..., "output": ...}.
struct RunConfig {
  ParsedSpec spec;
  SweepConfig sweep;
  std::optional<std::string> provided_reference_path;
  OutputPaths output;
};

inline std::vector<std::size_t> n_values_from_json(const json& j) {
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  detail::reject_unknown_keys(j, {"from", "to", "step"}, "n_values");
  const auto from = detail::get_as<std::size_t>(j, "from", "n_values");
  const auto to = detail::get_as<std::size_t>(j, "to", "n_values");
  const auto step = detail::get_or<std::size_t>(j, "step", 1, "n_values");
  if (step == 0 || to < from) fail(ErrorCode::parse_error, "n_values: empty range");
  std::vector<std::size_t> out;
  for (std::size_t n = from; n <= to; n += step) out.push_back(n);
  return out;
}

inline RunConfig run_config_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"spec", "sweep", "output"}, "run config");
  if (!j.contains("spec")) fail(ErrorCode::parse_error, "run config: missing 'spec'");
  RunConfig rc;
  rc.spec = spec_from_json(j.at("spec"));
  rc.sweep.spec = rc.spec.spec;
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    constexpr std::string_view where = "sweep";
    detail::reject_unknown_keys(s, {"n_values", "replicates", "reference", "averaging", "refresh"}, where);
    try {
      if (s.contains("n_values")) rc.sweep.n_values = n_values_from_json(s.at("n_values"));
    } catch (const json::exception&) {
      fail(ErrorCode::parse_error, "sweep: n_values must be an array of integers or {from, to, step}");
    }
    rc.sweep.replicates = detail::get_or<int>(s, "replicates", 10, where);
    rc.sweep.averaging = parse_averaging(detail::get_or<std::string>(s, "averaging", "mean_of_ratios", where));
    const auto refresh = detail::get_or<std::string>(s, "refresh", "per_n", where);
    if (refresh == "per_n") {
      rc.sweep.refresh = ReferenceRefresh::per_n;
    } else if (refresh == "per_replicate") {
      rc.sweep.refresh = ReferenceRefresh::per_replicate;
    } else {
      fail(ErrorCode::parse_error, "sweep: unknown refresh '" + refresh + "'");
    }
    if (s.contains("reference")) {
      const json& r = s.at("reference");
      detail::reject_unknown_keys(r, {"kind", "seed", "path"}, "sweep.reference");
      const auto kind = detail::get_as<std::string>(r, "kind", "sweep.reference");
      if (kind == "synthetic") {
        rc.sweep.reference = SyntheticReference{detail::get_or<std::uint64_t>(r, "seed", 0, "sweep.reference")};
      } else if (kind == "provided") {
        rc.provided_reference_path = detail::get_as<std::string>(r, "path", "sweep.reference");
      } else {
        fail(ErrorCode::parse_error, "sweep.reference: kind must be synthetic or provided");
      }
    }
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    detail::reject_unknown_keys(o, {"sweep_csv", "replicates_csv"}, "output");
    if (o.contains("sweep_csv")) rc.output.sweep_csv = detail::get_as<std::string>(o, "sweep_csv", "output");
    if (o.contains("replicates_csv")) {
      rc.output.replicates_csv = detail::get_as<std::string>(o, "replicates_csv", "output");
    }
  }
  return rc;
}

inline RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- sweep CSV

inline constexpr std::string_view kSweepHeader =
    "n,ratio_in_mean,ratio_in_sd,ratio_out_mean,ratio_out_sd,err_od_mean,valid_replicates";

inline std::string sweep_to_csv(const SweepResult& result) {
  const auto& c = result.config;
  std::string out = "# odnoise sweep v1\n";
  out += "# spec: " + spec_to_text(c.spec) + "\n";
  std::string reference = "provided";
  if (const auto* s = std::get_if<SyntheticReference>(&c.reference)) reference = "synthetic:" + std::to_string(s->seed);
  out += "# replicates=" + std::to_string(c.replicates) + " averaging=" + to_string(c.averaging) +
         " refresh=" + (c.refresh == ReferenceRefresh::per_n ? "per_n" : "per_replicate") +
         " reference=" + reference + "\n";
  out += std::string(kSweepHeader) + "\n";
  for (const auto& p : result.points) {
    out += std::to_string(p.n) + "," + format_double(p.ratio_in_mean) + "," + format_double(p.ratio_in_sd) + "," +
           format_double(p.ratio_out_mean) + "," + format_double(p.ratio_out_sd) + "," +
           format_double(p.err_od_mean) + "," + std::to_string(p.valid_replicates) + "\n";
  }
  return out;
}

inline std::string replicates_to_csv(const SweepResult& result) {
  std::string out = "n,replicate,err_od,err_in,err_out,ratio_in,ratio_out\n";
  for (const auto& p : result.points) {
    for (std::size_t r = 0; r < p.replicates.size(); ++r) {
      const auto& s = p.replicates[r];
      out += std::to_string(p.n) + "," + std::to_string(r) + "," + format_double(s.err_od) + "," +
             format_double(s.err_in) + "," + format_double(s.err_out) + "," + format_optional(s.ratio_in) + "," +
             format_optional(s.ratio_out) + "\n";
    }
  }
  return out;
}

/// One row of a sweep CSV as read back for fitting and plotting.
struct SweepRow {
  double n = 0.0;
  double ratio_in = 0.0;
  double ratio_out = 0.0;
  double ratio_in_sd = 0.0;
  double ratio_out_sd = 0.0;
};

inline std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const Columns cols(table, "sweep CSV");
  const auto cn = cols.require("n");
  const auto cin = cols.require("ratio_in_mean");
  const auto cout = cols.require("ratio_out_mean");
  const auto sin = cols.has("ratio_in_sd") ? std::optional(cols.require("ratio_in_sd")) : std::nullopt;
  const auto sout = cols.has("ratio_out_sd") ? std::optional(cols.require("ratio_out_sd")) : std::nullopt;
  std::vector<SweepRow> rows;
  for (std::size_t r = 0; r < cols.size(); ++r) {
    const auto& row = cols.row(r);
    SweepRow s;
    s.n = parse_double(row.fields[cn], row.line);
    s.ratio_in = parse_double(row.fields[cin], row.line);
    s.ratio_out = parse_double(row.fields[cout], row.line);
    if (sin) s.ratio_in_sd = parse_double(row.fields[*sin], row.line);
    if (sout) s.ratio_out_sd = parse_double(row.fields[*sout], row.line);
    rows.push_back(s);
  }
  return rows;
}

// ---------------------------------------------------------------- model CSV

inline std::string model_to_csv(const LowessModel& model) {
  std::string out = "# lowess frac=" + format_double(model.frac) + " side=" + to_string(model.side) + "\n";
  out += "n,ratio\n";
  for (const auto& k : model.knots) out += format_double(k.n) + "," + format_double(k.ratio) + "\n";
  return out;
}

inline LowessModel parse_model_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  LowessModel model;
  bool have_header = false;
  for (const auto& c : table.comments) {
    std::istringstream ss(c);
    std::string word;
    ss >> word;
    if (word != "lowess") continue;
    have_header = true;
    while (ss >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos) fail(ErrorCode::parse_error, "line 1: malformed model header token '" + word + "'");
      const auto key = word.substr(0, eq);
      const auto value = word.substr(eq + 1);
      if (key == "frac") {
        model.frac = parse_double(value, 1);
      } else if (key == "side") {
        model.side = parse_side(value);
      } else {
        fail(ErrorCode::parse_error, "line 1: unknown model header key '" + key + "'");
      }
    }
  }
  if (!have_header) fail(ErrorCode::parse_error, "line 1: missing '# lowess frac=... side=...' header");
  const Columns cols(table, "model CSV");
  const auto cn = cols.require("n");
  const auto cr = cols.require("ratio");
  for (std::size_t r = 0; r < cols.size(); ++r) {
    const auto& row = cols.row(r);
    CurvePoint p{parse_double(row.fields[cn], row.line), parse_double(row.fields[cr], row.line)};
    if (!(p.ratio > 0.0)) fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": ratio must be > 0");
    if (!model.knots.empty() && !(p.n > model.knots.back().n)) {
      fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": knots must be sorted by n");
    }
    model.knots.push_back(p);
  }
  if (model.knots.size() < 2) fail(ErrorCode::parse_error, "model has fewer than 2 knots");
  return model;
}

// ---------------------------------------------------------------- metrics CSV

inline constexpr std::string_view kMetricsHeader = "label,n,err_od,err_in,err_out,ratio_in,ratio_out";

inline std::string metrics_row(const std::string& label, std::size_t n, const ErrorSummary& s) {
  return csv_escape(label) + "," + std::to_string(n) + "," + format_double(s.err_od) + "," + format_double(s.err_in) +
         "," + format_double(s.err_out) + "," + format_optional(s.ratio_in) + "," + format_optional(s.ratio_out);
}

/// Empirical error-ratio point (one O-D matrix pair) for plotting.
struct EmpiricalRow {
  std::string label;
  double n = 0.0;
  std::optional<double> ratio_in;
  std::optional<double> ratio_out;
};

/// Reads any CSV with columns n, ratio_in, ratio_out (label optional),
/// e.g. the output of `metrics --out`.
inline std::vector<EmpiricalRow> parse_empirical_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const Columns cols(table, "empirical CSV");
  const auto cn = cols.require("n");
  const auto cin = cols.require("ratio_in");
  const auto cout = cols.require("ratio_out");
  const auto cl = cols.has("label") ? std::optional(cols.require("label")) : std::nullopt;
  std::vector<EmpiricalRow> rows;
  for (std::size_t r = 0; r < cols.size(); ++r) {
    const auto& row = cols.row(r);
    EmpiricalRow e;
    e.label = cl ? row.fields[*cl] : std::string();
    e.n = parse_double(row.fields[cn], row.line);
    e.ratio_in = parse_optional(row.fields[cin], row.line);
    e.ratio_out = parse_optional(row.fields[cout], row.line);
    rows.push_back(e);
  }
  return rows;
}

// ---------------------------------------------------------------- aggregation CSV

inline std::string aggregation_to_csv(const AggregationResult& result) {
  std::string out = "n,side,err_od\n";
  out += "1,baseline," + format_double(result.baseline_err_od) + "\n";
  for (const auto& e : result.entries) {
    out += std::to_string(e.block) + "," + to_string(e.side) + "," + format_double(e.err_od) + "\n";
  }
  return out;
}

}  // namespace odnoise::io
