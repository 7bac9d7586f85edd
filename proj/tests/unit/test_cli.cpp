#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cycloroute/cli/commands.hpp"
#include "cycloroute/cli/config.hpp"
#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"
#include "cycloroute/core/rng.hpp"

using namespace cycloroute;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cycloroute_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& j, const std::string& name = "cfg.json") {
    const fs::path p = dir_ / name;
    io::write_text(p, j.dump(2));
    return p;
  }

  Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "cycloroute");
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
  }

  Outcome run_with(const fs::path& cfg, const std::string& cmd, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"-c", cfg.string(), cmd};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir_;
};

json small_world(std::size_t days = 14) {
  return {{"seed", 2},
          {"paths", {{"output_dir", "out"}}},
          {"synth", {{"network", {{"vertices", 30}}}, {"days", days}, {"noise_std", 0.05}}},
          {"fit", {{"rank", 6}, {"train_days", 7}}},
          {"test_set", {{"hours", {8, 17}}, {"min_travel_time", 600}}}};
}

// Writes a fully observed matrix straight to the cleaned-matrix slot.
void write_clean(const fs::path& out_dir, const Eigen::MatrixXd& values, std::int64_t res = 600) {
  fs::create_directories(out_dir);
  io::write_matrix(out_dir / "clean.cmat",
                   TrafficMatrix(TimeGrid(1682899200, res, static_cast<std::size_t>(values.cols())), values));
}

std::vector<std::pair<double, double>> read_psd(const fs::path& p) {
  std::istringstream in(io::read_text(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace

TEST_F(CliTest, ConfigDefaultsAndFlagsWin) {
  const auto cfg = cli::config_from_json(json::object());
  EXPECT_EQ(cfg.fit.rank, 25u);
  EXPECT_EQ(cfg.predictors.size(), cli::default_predictors().size());
  EXPECT_EQ(cfg.test_set.first_day, 28u);  // the day after the training window
  EXPECT_EQ(cfg.predictors[1].name, "cyclo_weekly");

  const auto p = write_config({{"seed", 5}, {"workers", 1}});
  EXPECT_EQ(cli::load_config(p).synth.seed, 5u);
  const auto o = run({"-c", p.string(), "--seed", "9", "--out", (dir_ / "o9").string(), "synth"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto record = json::parse(io::read_text(dir_ / "o9" / "spec.json"));
  EXPECT_EQ(record["spec"]["seed"].get<int>(), 9);
}

TEST_F(CliTest, UnknownKeysAndBadValuesAreUsageErrors) {
  auto code_of = [&](const json& j) {
    const auto o = run_with(write_config(j), "synth");
    return std::make_pair(o.code, o.err);
  };
  auto [c1, e1] = code_of({{"sed", 1}});
  EXPECT_EQ(c1, 2);
  EXPECT_NE(e1.find("config.sed"), std::string::npos);
  auto [c2, e2] = code_of({{"synth", {{"noise_std", -0.1}}}});
  EXPECT_EQ(c2, 2);
  EXPECT_NE(e2.find("noise_std"), std::string::npos);
  auto [c3, e3] = code_of({{"synth", {{"network", {{"vertexes", 10}}}}}});
  EXPECT_EQ(c3, 2);
  EXPECT_NE(e3.find("synth.network.vertexes"), std::string::npos);
  auto [c4, e4] = code_of({{"evaluation", {{"alphas", {0.1, 1.5}}}}});
  EXPECT_EQ(c4, 2);
  EXPECT_NE(e4.find("alphas"), std::string::npos);
  auto [c5, e5] = code_of({{"synth", {{"seed", 3}}}});
  EXPECT_EQ(c5, 2);
  auto [c6, e6] = code_of({{"predictors", {{{"variant", "lag"}, {"delta", "day"}}, {{"variant", "lag"}, {"delta", 86400}}}}});
  EXPECT_EQ(c6, 2);
  EXPECT_NE(e6.find("lag_day"), std::string::npos);
  auto [c7, e7] = code_of({{"predictors", {{{"variant", "realtime"}, {"name", "a,b"}}}}});
  EXPECT_EQ(c7, 2);
  EXPECT_NE(e7.find("predictors[0].name"), std::string::npos);
  EXPECT_EQ(run({"-c", (dir_ / "absent.json").string(), "synth"}).code, 2);
}

TEST_F(CliTest, UsageAndHelp) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"fit", "--rank", "zero"}).code, 2);
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("evaluate"), std::string::npos);
}

TEST_F(CliTest, SynthCreatesMissingOutputDirectory) {
  auto j = small_world();
  j["paths"]["output_dir"] = "deep/nested/out";
  const auto o = run_with(write_config(j), "synth");
  ASSERT_EQ(o.code, 0) << o.err;
  for (const char* f : {"graph.csv", "truth.cmat", "observed.cmat", "spec.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "deep/nested/out" / f)) << f;
  }
}

TEST_F(CliTest, EnvironmentVariableSuppliesDefaultConfig) {
  const auto p = write_config(small_world());
  ::setenv(cli::kConfigEnv, p.c_str(), 1);
  const auto o = run({"synth"});
  ::unsetenv(cli::kConfigEnv);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "truth.cmat"));
}

TEST_F(CliTest, PreprocessReportMatchesInjection) {
  auto j = small_world();
  j["synth"]["network"]["vertices"] = 60;
  j["synth"]["missingness"] = {{"cell_rate", 0.04}};
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  const auto o = run_with(p, "preprocess");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto clean = io::read_matrix(dir_ / "out" / "clean.cmat");
  EXPECT_TRUE(clean.fully_observed());
  const auto report = json::parse(io::read_text(dir_ / "out" / "preprocess_report.json"));
  EXPECT_NEAR(report["input"]["missing_fraction"].get<double>(), 0.04, 0.004);
  // Every cell missing at input is either gap-filled, imputed or in a dropped row.
  EXPECT_EQ(report["output"]["segments"].get<std::size_t>(), clean.m());
  EXPECT_EQ(report["row_map"].size(), clean.m());
}

TEST_F(CliTest, PreprocessCleanInputIsNoOp) {
  const auto p = write_config(small_world());
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  const auto report = json::parse(io::read_text(dir_ / "out" / "preprocess_report.json"));
  EXPECT_EQ(report["outliers_removed"].get<std::size_t>(), 0u);
  EXPECT_EQ(report["gap_cells_interpolated"].get<std::size_t>(), 0u);
  EXPECT_TRUE(report["rows_dropped"].empty());
  EXPECT_EQ(report["scc"]["segments_removed"].get<std::size_t>(), 0u);
  EXPECT_EQ(report["cells_imputed"].get<std::size_t>(), 0u);
  const auto truth = io::read_matrix(dir_ / "out" / "truth.cmat");
  const auto clean = io::read_matrix(dir_ / "out" / "clean.cmat");
  EXPECT_TRUE(truth.values().cwiseEqual(clean.values()).all());
}

TEST_F(CliTest, PreprocessListsAllMissingRow) {
  const auto p = write_config(small_world());
  ASSERT_EQ(run_with(p, "synth").code, 0);
  const auto truth = io::read_matrix(dir_ / "out" / "truth.cmat");
  Mask mask = Mask::Constant(truth.values().rows(), truth.values().cols(), true);
  Eigen::MatrixXd values = truth.values();
  mask.row(3).setConstant(false);
  values.row(3).setConstant(std::numeric_limits<double>::quiet_NaN());
  io::write_matrix(dir_ / "out" / "observed.cmat", TrafficMatrix(truth.grid(), values, mask));
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  const auto report = json::parse(io::read_text(dir_ / "out" / "preprocess_report.json"));
  const auto dropped = report["rows_dropped"].get<std::vector<std::size_t>>();
  EXPECT_NE(std::find(dropped.begin(), dropped.end(), 3u), dropped.end());
}

TEST_F(CliTest, FitWritesWeeklyModelWithL1008) {
  auto j = small_world(28);
  j["fit"]["train_days"] = 28;
  j["predictors"] = {{{"variant", "cyclo_lowrank"}, {"cycle", "weekly"}}};
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  const auto o = run_with(p, "fit", {"--rank", "5"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto header = io::read_container_header(dir_ / "out" / "models" / "cyclo_weekly.cmat");
  EXPECT_EQ(header["L"].get<std::size_t>(), 604800u / 600u);
  EXPECT_EQ(header["m"].get<std::size_t>(), 1008u);
  EXPECT_EQ(header["n"].get<std::size_t>(), 5u);
  EXPECT_EQ(io::read_container_header(dir_ / "out" / "basis.cmat")["k"].get<std::size_t>(), 5u);
}

TEST_F(CliTest, FitShorterThanCycleIsInsufficientData) {
  auto j = small_world();
  j["fit"]["train_days"] = 5;
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  const auto o = run_with(p, "fit");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("InsufficientData"), std::string::npos);
}

TEST_F(CliTest, FitMdlOnPlantedRankFive) {
  // m = 200, n = 2000, five planted directions: a uniform level (keeping every
  // cell a positive travel time) and four with eigenvalues ten times the noise
  CounterRng rng(17, Stream::Testing, 0);
  const Eigen::Index m = 200, n = 2000, k = 5;
  Eigen::MatrixXd a(m, k), s(k, n), noise(m, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  a.col(0).setOnes();
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 3.0 * rng.normal();
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(m, k);
  if (q(0, 0) < 0) q.col(0) *= -1.0;
  s.row(0).array() += 1000.0 * std::sqrt(static_cast<double>(m));
  const Eigen::MatrixXd w = q * s + noise;
  ASSERT_GT(w.minCoeff(), 0.0);
  // 432 s intervals: 200 columns per day, so ten days hold n = 2000
  write_clean(dir_ / "out", w, 432);
  json j = {{"paths", {{"output_dir", "out"}}},
            {"fit", {{"train_days", 10}}},
            {"predictors", {{{"variant", "lowrank_static"}}}}};
  const auto p2 = write_config(j);
  const auto o = run_with(p2, "fit", {"--mdl"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("k*=5\n"), std::string::npos) << o.out.substr(o.out.size() - 200);
  EXPECT_EQ(io::read_container_header(dir_ / "out" / "basis.cmat")["k"].get<std::size_t>(), 5u);
  const auto o2 = run_with(p2, "mdl");
  ASSERT_EQ(o2.code, 0);
  EXPECT_NE(o2.out.find("k*=5\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "mdl_curve.csv"));

  write_clean(dir_ / "out", w, 43);  // does not divide a day
  EXPECT_EQ(run_with(p2, "fit", {"--mdl"}).code, 2);
}

TEST_F(CliTest, SpectraLocatesPlantedDailyMode) {
  const Eigen::Index m = 20, n = 28 * 144;
  CounterRng rng(3, Stream::Testing, 0);
  Eigen::VectorXd u(m), base(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    u(i) = rng.normal();
    base(i) = 200.0 + 50.0 * rng.uniform();
  }
  Eigen::MatrixXd w(m, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    w.col(c) = base + 10.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(c) / 144.0) * u;
  }
  write_clean(dir_ / "out", w);
  const auto p = write_config({{"paths", {{"output_dir", "out"}}}, {"fit", {{"train_days", 28}}}});
  const auto o = run_with(p, "spectra", {"--modes", "1", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto dc = read_psd(dir_ / "out" / "spectra" / "mode_1.csv");
  std::size_t best = 0;
  for (std::size_t b = 1; b < dc.size(); ++b)
    if (dc[b].second > dc[best].second) best = b;
  EXPECT_EQ(best, 0u);  // the constant mode is DC-dominated
  const auto daily = read_psd(dir_ / "out" / "spectra" / "mode_2.csv");
  best = 0;
  for (std::size_t b = 1; b < daily.size(); ++b)
    if (daily[b].second > daily[best].second) best = b;
  const double bin = daily[1].first - daily[0].first;
  EXPECT_NEAR(daily[best].first, 1.0, bin + 1e-12);

  EXPECT_EQ(run_with(p, "spectra", {"--modes", "21"}).code, 2);
  EXPECT_EQ(run_with(p, "spectra", {"--modes", "0"}).code, 2);
}

TEST_F(CliTest, EvaluateRealtimeOnlyIsAllZero) {
  auto j = small_world();
  j["predictors"] = {{{"variant", "realtime"}}};
  j["evaluation"] = {{"static_oracle", false}};
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  const auto o = run_with(p, "evaluate");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto stats = json::parse(io::read_text(dir_ / "out" / "results" / "stats.json"));
  ASSERT_EQ(stats["predictors"].size(), 1u);
  const auto& rt = stats["predictors"][0];
  EXPECT_GT(rt["count"].get<std::size_t>(), 0u);
  EXPECT_EQ(rt["mean_seconds"].get<double>(), 0.0);
  for (const auto& [k, v] : rt["upper_quantiles_seconds"].items()) EXPECT_EQ(v.get<double>(), 0.0) << k;
  EXPECT_NE(o.out.find("realtime"), std::string::npos);
  const auto rep = run_with(p, "report");
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("0.000"), std::string::npos);
  EXPECT_EQ(run_with(p, "report", {"--by", "weather"}).code, 2);
}

TEST_F(CliTest, EvaluateIsReproducibleAcrossRerunsAndWorkers) {
  auto j = small_world();
  j["predictors"] = {{{"variant", "cyclo_lowrank"}, {"cycle", "daily"}},
                     {{"variant", "lag"}, {"delta", "day"}},
                     {{"variant", "realtime"}}};
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  ASSERT_EQ(run_with(p, "fit").code, 0);
  ASSERT_EQ(run_with(p, "evaluate").code, 0);
  const auto results = dir_ / "out" / "results";
  const auto first = io::read_text(results / "regret_samples.csv");
  const auto tests = io::read_text(dir_ / "out" / "testset.csv");
  const auto stats = io::read_text(results / "stats.json");
  const auto o = run_with(p, "evaluate", {"--rebuild-tests", "--workers", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(io::read_text(dir_ / "out" / "testset.csv"), tests);
  EXPECT_EQ(io::read_text(results / "regret_samples.csv"), first);
  EXPECT_EQ(io::read_text(results / "stats.json"), stats);
}

TEST_F(CliTest, EvaluateTotalFailureExitsOne) {
  auto j = small_world();
  j["predictors"] = {{{"variant", "realtime"}}};
  const auto p = write_config(j);
  ASSERT_EQ(run_with(p, "synth").code, 0);
  ASSERT_EQ(run_with(p, "preprocess").code, 0);
  // departures long after the data ends
  io::write_text(dir_ / "out" / "testset.csv",
                 "origin,destination,t_start,direction,hop_length,hour,day_of_week,workday\n"
                 "0,1,1900000000,inner_to_outer,1,8,0,1\n");
  const auto o = run_with(p, "evaluate");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.out.find("failed runs"), std::string::npos);
}

TEST_F(CliTest, MissingInputsAreUsageErrors) {
  const auto p = write_config(small_world());
  EXPECT_EQ(run_with(p, "preprocess").code, 2);
  EXPECT_EQ(run_with(p, "fit").code, 2);
  EXPECT_EQ(run_with(p, "evaluate").code, 2);
  EXPECT_EQ(run_with(p, "report").code, 2);
}
