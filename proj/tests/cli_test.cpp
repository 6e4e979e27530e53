#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "odnoise/io.hpp"

using namespace odnoise;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ODNOISE_CLI_PATH;
const std::string kFixtures = ODNOISE_FIXTURES_DIR;

struct CliRun {
  int status = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("odnoise_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args, const std::string& env = "env -u OD_NOISE_SEED") const {
    const std::string err_path = path("stderr.txt");
    const std::string cmd = env + " " + kCli + " " + args + " 2>" + err_path;
    CliRun r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = io::read_file(err_path);
    return r;
  }

  static void expect_one_line_error(const CliRun& r) {
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  }

  fs::path dir_;
};

std::vector<std::string> csv_row(const std::string& text, std::size_t row) {
  return io::parse_csv(text).rows.at(row).fields;
}

}  // namespace

TEST_F(Cli, GenerateWritesNormalizedMatrixDeterministically) {
  ASSERT_EQ(run("generate --n 5 --seed 3 --out " + path("a.csv")).status, 0);
  ASSERT_EQ(run("generate --n 5 --seed 3 --out " + path("b.csv")).status, 0);
  const auto m = io::load_matrix(path("a.csv"));
  EXPECT_EQ(m.matrix.n(), 5u);
  EXPECT_NEAR(m.matrix.total(), 1.0, 1e-12);
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_EQ(io::read_file(path("a.csv")), io::read_file(path("b.csv")));
}

TEST_F(Cli, GenerateRejectsOneStop) {
  const auto r = run("generate --n 1 --seed 3");
  EXPECT_EQ(r.status, 2);
  expect_one_line_error(r);
}

TEST_F(Cli, UsageErrorsAreOneLine) {
  expect_one_line_error(run("generate --seed 3"));
  expect_one_line_error(run("bogus"));
}

TEST_F(Cli, SeedMustComeFromSomewhere) {
  expect_one_line_error(run("generate --n 4"));
  const auto env = run("generate --n 4", "env OD_NOISE_SEED=3");
  EXPECT_EQ(env.status, 0);
  EXPECT_EQ(env.out, run("generate --n 4 --seed 3").out);
  expect_one_line_error(run("generate --n 4", "env OD_NOISE_SEED=abc"));
}

TEST_F(Cli, PerturbWithVanishingNoiseReturnsInput) {
  const auto r = run("perturb --ref " + kFixtures + "/small_ref.csv --spec " + kFixtures + "/spec_tiny.json --out " +
                     path("est.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ref = io::load_matrix(kFixtures + "/small_ref.csv").matrix;
  const auto est = io::load_matrix(path("est.csv")).matrix;
  for (std::size_t k = 0; k < ref.values().size(); ++k) EXPECT_NEAR(est.values()[k], ref.values()[k], 1e-12);
}

TEST_F(Cli, PerturbClampedHasNoNegativeCellsAndMatchesGolden) {
  ASSERT_EQ(run("generate --n 12 --seed 8 --out " + path("ref.csv")).status, 0);
  const auto r = run("perturb --ref " + path("ref.csv") + " --spec " + kFixtures + "/spec_clamped.json --out " +
                     path("est.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto est = io::load_matrix(path("est.csv"));
  EXPECT_TRUE(est.warnings.empty());
  EXPECT_FALSE(est.matrix.has_negative_entries());
  EXPECT_EQ(io::read_file(path("est.csv")), io::read_file(kFixtures + "/golden_perturb_clamped.csv"));
}

TEST_F(Cli, PerturbSeedFlagOverridesSpec) {
  const std::string base = "perturb --ref " + kFixtures + "/survey27_ref.csv --spec " + kFixtures + "/spec_composite.json";
  const auto a = run(base);
  const auto b = run(base + " --seed 2024");
  const auto c = run(base + " --seed 1");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST_F(Cli, MetricsOfIdenticalFilesAreZeroWithNullRatios) {
  const auto r = run("metrics --ref " + kFixtures + "/small_ref.csv --est " + kFixtures + "/small_ref.csv");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto row = csv_row(r.out, 1);
  EXPECT_EQ(row[2], "0");
  EXPECT_EQ(row[3], "0");
  EXPECT_EQ(row[4], "0");
  EXPECT_EQ(row[5], "null");
  EXPECT_EQ(row[6], "null");
}

TEST_F(Cli, MetricsOnSurveyScaleFixture) {
  const auto r = run("metrics --ref " + kFixtures + "/survey27_ref.csv --est " + kFixtures + "/survey27_est.csv --label survey --out " +
                     path("m.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto row = csv_row(r.out, 1);
  EXPECT_EQ(row[0], "survey");
  EXPECT_EQ(row[1], "27");
  const double rin = std::stod(row[5]);
  const double rout = std::stod(row[6]);
  EXPECT_GE(rin, 7.3);
  EXPECT_LE(rin, 8.7);
  EXPECT_GE(rout, 10.4);
  EXPECT_LE(rout, 12.2);
  EXPECT_EQ(io::read_file(path("m.csv")), r.out);
}

TEST_F(Cli, MetricsWithCounts) {
  const std::string base = "metrics --ref " + kFixtures + "/small_ref.csv --est " + kFixtures + "/small_est.csv";
  const auto plain = run(base);
  const auto counted = run(base + " --counts " + kFixtures + "/small_counts.csv");
  ASSERT_EQ(counted.status, 0) << counted.err;
  EXPECT_NEAR(std::stod(csv_row(plain.out, 1)[3]), std::stod(csv_row(counted.out, 1)[3]), 1e-15);
  expect_one_line_error(run(base + " --counts " + kFixtures + "/small_counts_bad.csv"));
}

TEST_F(Cli, SweepFitInferRoundTripOnAdditiveNoise) {
  auto r = run("sweep --spec " + kFixtures + "/spec_additive_sweep.json --out " + path("sweep.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  r = run("fit --in " + path("sweep.csv") + " --frac 0.2 --side boarding --out " + path("model.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const double e = 0.002;
  r = run("infer --model " + path("model.csv") + " --n 25 --count-error " + io::format_double(5 * e));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto row = csv_row(r.out, 1);
  EXPECT_EQ(row[1], "boarding");
  EXPECT_NEAR(std::stod(row[4]) / e, 1.0, 0.10);

  const auto refused = run("infer --model " + path("model.csv") + " --n 80 --count-error 0.01");
  expect_one_line_error(refused);
  EXPECT_NE(refused.err.find("extrapolation_refused"), std::string::npos);
}

TEST_F(Cli, AggregateBlockOfOneEqualsMetrics) {
  const std::string pair = "--ref " + kFixtures + "/survey27_ref.csv --est " + kFixtures + "/survey27_est.csv";
  const auto m = run("metrics " + pair);
  const auto a = run("aggregate " + pair + " --n 1 --side alighting");
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(csv_row(a.out, 1)[2], csv_row(m.out, 1)[2]);
  const auto all = run("aggregate " + pair + " --n 3 --all");
  ASSERT_EQ(all.status, 0);
  EXPECT_EQ(io::parse_csv(all.out).rows.size(), 1u + 1u + 6u);
  expect_one_line_error(run("aggregate " + pair + " --n 28 --side boarding"));
}

TEST_F(Cli, ReportWritesSvgAndPlotData) {
  const auto r = run("report --sweep " + kFixtures + "/report_sweep.csv --out " + path("plot.svg"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto svg = io::read_file(path("plot.svg"));
  EXPECT_NE(svg.find("id=\"ratio-in\""), std::string::npos);
  EXPECT_NE(svg.find("id=\"ratio-out\""), std::string::npos);
  EXPECT_NE(svg.find("id=\"sqrt-n\""), std::string::npos);
  EXPECT_TRUE(fs::exists(path("plot.csv")));

  const auto with_emp = run("report --sweep " + kFixtures + "/report_sweep.csv --empirical " + kFixtures +
                            "/report_empirical.csv --out " + path("golden.svg"));
  ASSERT_EQ(with_emp.status, 0) << with_emp.err;
  EXPECT_EQ(io::read_file(path("golden.svg")), io::read_file(kFixtures + "/golden_report.svg"));
}

TEST_F(Cli, ReportMalformedCsvNamesTheLine) {
  io::write_file_atomic(path("bad.csv"), "n,ratio_in_mean,ratio_out_mean\n4,2.0,2.1\n9,abc,3.0\n");
  const auto r = run("report --sweep " + path("bad.csv") + " --out " + path("x.csv"));
  expect_one_line_error(r);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, SweepOnProvidedReferenceResolvesRelativePath) {
  ASSERT_EQ(run("generate --n 9 --seed 4 --out " + path("ref.csv")).status, 0);
  io::write_file_atomic(path("run.json"),
                        R"({"spec": {"terms": [{"kind": "additive", "amplitude": 0.1}], "seed": 3},
                            "sweep": {"n_values": [9], "replicates": 50,
                                      "reference": {"kind": "provided", "path": "ref.csv"}}})");
  const auto r = run("sweep --spec " + path("run.json"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = io::parse_sweep_csv(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n, 9.0);
  EXPECT_NE(r.out.find("reference=provided"), std::string::npos);
}
