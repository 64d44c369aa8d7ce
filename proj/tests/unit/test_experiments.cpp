#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ampscape/experiments.hpp"
#include "test_support.hpp"

using namespace ampscape;
using json = nlohmann::json;

namespace {

ExperimentConfig small(const std::string& extra = "") {
  return parse_experiment_config(R"({"ensemble": {"d": 6, "n": 48}, "trials": 3, "seed": 5)" + extra + "}");
}

std::string csv_of(const std::vector<TrialRecord>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, rows);
  return os.str();
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_experiment_config(R"({"ensemble": {"d": 10}})");
  EXPECT_EQ(c.ensemble.n, 80);
  EXPECT_EQ(c.p, std::vector<Index>{3});
  EXPECT_EQ(c.trials, 1);
  EXPECT_EQ(c.loss, LossFamily::Amplitude);
  EXPECT_DOUBLE_EQ(c.success_threshold, 1e-4);
}

TEST(Config, RejectsInvalid) {
  EXPECT_THROW(parse_experiment_config("{"), ArgumentError);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "trails": 3})"), ArgumentError);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "trials": 0})"), ArgumentError);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "noise": []})"), ArgumentError);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "p": [1]})"), PreconditionViolated);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "methods": ["sdp"]})"), ArgumentError);
  EXPECT_THROW(parse_experiment_config(R"({"ensemble": {"d": 4}, "trials": "x"})"), ArgumentError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), IoError);
}

TEST(Config, SpectralLambdaFloorEnforced) {
  const std::string base = R"({"ensemble": {"dist": "spectral", "n": 200, "spectrum": {"power_law": 2, "dim": 512}})";
  const auto c = parse_experiment_config(base + R"(, "lambda_floor_multiples": [1, 4]})");
  EXPECT_EQ(c.ensemble.d, 512);
  EXPECT_EQ(c.effective_d, 16);
  const double floor = c.lambda_floor();
  EXPECT_NEAR(floor, 0.01501, 1e-5);
  const auto grid = expand_grid(c);
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_DOUBLE_EQ(grid[0].lambda, floor);
  EXPECT_DOUBLE_EQ(grid[1].lambda, 4 * floor);
  EXPECT_THROW(parse_experiment_config(base + R"(, "lambda": [0.001]})"), ArgumentError);
}

TEST(Config, JsonRoundTrip) {
  const auto c = small(R"(, "methods": ["factored", "phasecut"], "noise": [0, 0.1], "p": [2, 3])");
  const auto d = parse_experiment_config(experiment_config_to_json(c));
  EXPECT_EQ(experiment_config_to_json(c), experiment_config_to_json(d));
}

TEST(Grid, NestingOrder) {
  const auto c = small(R"(, "methods": ["factored", "phasecut"], "noise": [0, 0.1], "p": [2, 3], "lambda": [0, 1])");
  const auto g = expand_grid(c);
  ASSERT_EQ(g.size(), 16u);
  EXPECT_EQ(g[0].method, SolveMethod::Factored);
  EXPECT_EQ(g[1].lambda, 1.0);
  EXPECT_EQ(g[2].p, 3);
  EXPECT_EQ(g[4].noise, 0.1);
  EXPECT_EQ(g[8].method, SolveMethod::PhaseCut);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].index, static_cast<int>(i));
}

TEST(RunTrial, Deterministic) {
  const auto c = small(R"(, "noise": [0.05])");
  EXPECT_EQ(trial_csv_row(run_trial(c, 1)), trial_csv_row(run_trial(c, 1)));
  EXPECT_NE(trial_csv_row(run_trial(c, 1)), trial_csv_row(run_trial(c, 2)));
}

TEST(RunTrial, NoiselessRecoveryRate) {
  const auto c = parse_experiment_config(R"({"ensemble": {"d": 10, "n": 80}, "trials": 20, "seed": 3})");
  const auto res = run_sweep(c);
  int ok = 0;
  for (const auto& r : res.records) ok += r.nuclear_error <= 1e-4 ? 1 : 0;
  EXPECT_GE(ok, 18);
  const json s = json::parse(res.summary_json);
  EXPECT_DOUBLE_EQ(s["grid"][0]["success_rate"].get<double>(),
                   [&] {
                     int k = 0;
                     for (const auto& r : res.records) k += r.relative_nuclear_error <= 1e-4 ? 1 : 0;
                     return k / 20.0;
                   }());
}

TEST(RunTrial, NoisyErrorsFinite) {
  const auto c = small(R"(, "noise": [0.1], "methods": ["factored", "phasecut"])");
  for (const auto& r : run_sweep(c).records) {
    EXPECT_TRUE(std::isfinite(r.vector_error));
    EXPECT_GE(r.vector_error, 0.0);
    EXPECT_TRUE(std::isfinite(r.slack));
  }
}

TEST(Sweep, RowCountAndThreadIndependence) {
  auto c = small(R"(, "methods": ["factored", "phasecut"], "noise": [0, 0.05], "p": [2, 3])");
  c.threads = 1;
  const auto a = run_sweep(c);
  c.threads = 3;
  const auto b = run_sweep(c);
  EXPECT_EQ(a.records.size(), 3u * 8u);
  EXPECT_EQ(csv_of(a.records), csv_of(b.records));
  for (std::size_t k = 1; k < a.records.size(); ++k) {
    const auto& p = a.records[k - 1];
    const auto& q = a.records[k];
    EXPECT_TRUE(p.grid < q.grid || (p.grid == q.grid && p.trial < q.trial));
  }
}

TEST(Sweep, PhaseCutAndFactoredShareSeeds) {
  const auto c = small(R"(, "methods": ["factored", "phasecut"])");
  const auto res = run_sweep(c);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(res.records[static_cast<std::size_t>(t)].seed, res.records[static_cast<std::size_t>(3 + t)].seed);
}

TEST(Sweep, WritesFilesAndReportsIoErrors) {
  auto c = small();
  c.output = ::testing::TempDir() + "ampscape_sweep.csv";
  run_sweep(c);
  std::ifstream csv(c.output);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, trial_csv_header());
  std::ifstream summary(c.output + ".summary.json");
  EXPECT_TRUE(summary.good());
  c.output = "/nonexistent/dir/out.csv";
  EXPECT_THROW(run_sweep(c), IoError);
}

TEST(Summary, SlopesOnSyntheticRecords) {
  auto c = small(R"(, "noise": [0.01, 0.02, 0.04], "trials": 1)");
  std::vector<TrialRecord> rows;
  for (const auto& g : expand_grid(c)) {
    TrialRecord r;
    r.grid = g.index;
    r.noise = g.noise;
    r.vector_error = 3.0 * g.noise;
    r.relative_nuclear_error = 1.0;
    rows.push_back(r);
  }
  const json s = json::parse(sweep_summary_json(c, rows));
  ASSERT_EQ(s["slope_vector_error_vs_noise"].size(), 1u);
  EXPECT_NEAR(s["slope_vector_error_vs_noise"][0]["slope"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(s["grid"].size(), 3u);
}

TEST(Stats, SlopeAndMedian) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope({1}, {1})));
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Threads, EnvironmentCap) {
  EXPECT_EQ(resolve_thread_count(5), 5);
  setenv("AMPSCAPE_THREADS", "2", 1);
  EXPECT_EQ(resolve_thread_count(0), 2);
  setenv("AMPSCAPE_THREADS", "junk", 1);
  EXPECT_GE(resolve_thread_count(0), 1);
  unsetenv("AMPSCAPE_THREADS");
}
