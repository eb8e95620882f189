#include "dkf/cli.hpp"
#include "dkf/config.hpp"
#include "dkf/diffusion_combiner.hpp"
#include "dkf/errors.hpp"
#include "dkf/excitation_diagnostics.hpp"
#include "dkf/monte_carlo.hpp"
#include "dkf/output.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace dkf {
namespace {

namespace fs = std::filesystem;
using harness::ExperimentConfig;

ExperimentConfig fig1() { return harness::parse_config(harness::bundled_fig1_config()); }

ExperimentConfig small_fig1(int runs = 4) {
  auto c = fig1();
  c.horizon = 200;
  c.runs = runs;
  c.record_stride = 50;
  return c;
}

std::string fig1_with(const std::string& from, const std::string& to) {
  std::string text(harness::bundled_fig1_config());
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

ConfigError parse_error(const std::string& text) {
  try {
    harness::parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError";
  return ConfigError("", 0, "");
}

TEST(Config, BundledExample) {
  const auto c = fig1();
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.m, 3);
  EXPECT_EQ(c.horizon, 2000);
  EXPECT_EQ(c.runs, 500);
  EXPECT_EQ(c.mode, harness::Mode::kBoth);
  EXPECT_DOUBLE_EQ(c.adjacency(0, 1), 2.0 / 3);
  EXPECT_EQ(c.signal.delta_cov, 0.3 * Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(c.signal.generators[2].A(1, 0), 0.8);
  EXPECT_EQ(c.signal.generators[1].C(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(c.signal.generators[0].innovation_cov(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(c.signal.noise[1].variance, 0.3);
  EXPECT_EQ(c.Q, 0.1 * Matrix::Identity(3, 3));
  EXPECT_EQ(c.initial_state(2).P, Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(c.initial_state(0).r, 0.1);
  EXPECT_TRUE(graph::validate(c.graph()).ok());
}

TEST(Config, DefaultsAndStdScale) {
  auto c = harness::parse_config(fig1_with("theta_hat0 = [0, 0, 0]\n", ""));
  EXPECT_EQ(c.theta_hat0[1], Vector::Zero(3));
  c = harness::parse_config(fig1_with("noise_scale = variance", "noise_scale = std"));
  EXPECT_NEAR(c.signal.noise[0].variance, 0.09, 1e-15);
  EXPECT_NEAR(c.signal.delta_cov(2, 2), 0.09, 1e-15);
  EXPECT_NEAR(c.signal.generators[0].innovation_cov(0, 0), 0.09, 1e-15);
}

TEST(Config, NoncooperativeDefaultsToIdentityGraph) {
  std::string text = fig1_with("mode = both", "mode = noncooperative");
  const auto start = text.find("adjacency");
  const auto end = text.find("theta0");
  text.erase(start, end - start);
  const auto c = harness::parse_config(text);
  EXPECT_EQ(c.adjacency, Matrix::Identity(3, 3));
}

TEST(Config, UnbalancedGraphIsNamed) {
  const auto e = parse_error(fig1_with("[2/3, 0,   1/3]]", "[1/3, 0,   1/3]]"));
  EXPECT_EQ(e.field(), "adjacency");
  EXPECT_NE(std::string(e.what()).find("balanced"), std::string::npos) << e.what();
}

TEST(Config, DisconnectedGraphIsNamed) {
  const auto e = parse_error(fig1_with(
      "[[1/3, 2/3, 0  ],\n             [0,   1/3, 2/3],\n             [2/3, 0,   1/3]]",
      "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]"));
  EXPECT_NE(std::string(e.what()).find("strongly_connected"), std::string::npos) << e.what();
}

TEST(Config, UnknownKeyReportsLine) {
  const auto e = parse_error(std::string(harness::bundled_fig1_config()) + "\nbogus = 1\n");
  EXPECT_EQ(e.field(), "bogus");
  const auto lines = std::count(harness::bundled_fig1_config().begin(),
                                harness::bundled_fig1_config().end(), '\n');
  EXPECT_EQ(e.line(), lines + 2);
}

TEST(Config, FieldErrors) {
  EXPECT_EQ(parse_error(fig1_with("r = 0.1", "r = 0")).field(), "r");
  EXPECT_EQ(parse_error(fig1_with("r = 0.1", "r = -1")).field(), "r");
  EXPECT_EQ(parse_error(fig1_with("runs = 500", "runs = 0")).field(), "runs");
  EXPECT_EQ(parse_error(fig1_with("horizon = 2000", "horizon = 0")).field(), "horizon");
  EXPECT_EQ(parse_error(fig1_with("mode = both", "mode = sometimes")).field(), "mode");
  EXPECT_EQ(parse_error(fig1_with("Q = 0.1 ", "Q = -0.1 ")).field(), "Q");
  EXPECT_EQ(parse_error(fig1_with("seed = 20240101", "seed = 1\nseed = 2")).field(), "seed");
  EXPECT_EQ(parse_error(fig1_with("sensor.1.C = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]",
                                  "sensor.1.C = [[1, 0], [0, 0]]"))
                .field(),
            "sensor.1.C");
  EXPECT_EQ(parse_error(fig1_with("r = 0.1\n", "")).field(), "r");
}

TEST(Config, MultiLineListLineNumber) {
  const auto e = parse_error(fig1_with("[0,   1/3, 2/3],", "[0,   x, 2/3],"));
  EXPECT_EQ(e.field(), "adjacency");
  EXPECT_EQ(e.line(), 7);
}

TEST(Config, HashAndSchedule) {
  auto a = fig1(), b = fig1();
  EXPECT_EQ(harness::config_hash(a), harness::config_hash(b));
  b.seed += 1;
  EXPECT_NE(harness::config_hash(a), harness::config_hash(b));
  const auto ks = harness::record_schedule(2000, 100);
  ASSERT_EQ(ks.size(), 21u);
  EXPECT_EQ(ks.front(), 1);
  EXPECT_EQ(ks[1], 100);
  EXPECT_EQ(ks.back(), 2000);
  EXPECT_EQ(harness::record_schedule(250, 100), (std::vector<long>{1, 100, 200, 250}));
  EXPECT_EQ(harness::record_schedule(1, 100), (std::vector<long>{1}));
}

TEST(Config, LoadMissingFileIsIoError) {
  EXPECT_THROW(harness::load_config("/nonexistent/dir/x.cfg"), IoError);
}

TEST(Harness, SingleRunEqualsItsOwnErrors) {
  const auto c = small_fig1(1);
  const auto art = harness::run_monte_carlo(c);
  const auto run = harness::simulate_run(c, 0, false);
  ASSERT_TRUE(art.distributed && run.distributed);
  EXPECT_EQ(art.distributed->mse, *run.distributed);
  EXPECT_EQ(art.noncooperative->mse, *run.noncooperative);
  EXPECT_EQ(art.distributed->std_error[0][0], 0.0);
}

TEST(Harness, MeanMatchesSequentialOracle) {
  auto c = small_fig1(6);
  c.workers = 3;
  const auto art = harness::run_monte_carlo(c);
  std::vector<std::vector<double>> sum(3, std::vector<double>(5, 0.0));
  for (int r = 0; r < c.runs; ++r) {
    const auto run = harness::simulate_run(c, static_cast<std::uint64_t>(r), false);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 5; ++j) sum[i][j] += (*run.distributed)[i][j];
    }
  }
  ASSERT_EQ(art.distributed->ks, (std::vector<long>{1, 50, 100, 150, 200}));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_EQ(art.distributed->mse[i][j], sum[i][j] / c.runs);
  }
}

TEST(Harness, WorkerCountDoesNotChangeResults) {
  auto c = small_fig1(5);
  c.workers = 1;
  const auto one = harness::errors_csv(harness::run_monte_carlo(c));
  c.workers = 4;
  EXPECT_EQ(one, harness::errors_csv(harness::run_monte_carlo(c)));
}

TEST(Harness, TraceNoiseMagnitudes) {
  auto c = small_fig1(1);
  c.retain_traces = true;
  const auto run = harness::simulate_run(c, 0, true);
  ASSERT_TRUE(run.trace);
  signal::SignalSource src(c.signal, c.seed, 0);
  const auto adj = std::make_shared<const graph::AdjacencyMatrix>(c.adjacency);
  const auto traj = diffusion::record_trajectory(src, diffusion::make_network(adj, c.initial_states()),
                                                 static_cast<std::size_t>(c.horizon));
  const auto xi = diffusion::noise_magnitudes(traj);
  ASSERT_EQ(run.trace->xi.size(), xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) EXPECT_DOUBLE_EQ(run.trace->xi[k], xi[k]);
}

TEST(Harness, BlockConstantOfExample) {
  const auto c = fig1();
  const auto adj = c.graph();
  EXPECT_EQ(graph::diameter(adj), 2);
  signal::SignalSource src(c.signal, c.seed, 0);
  const auto traj = diffusion::record_trajectory(
      src, diffusion::make_network(std::make_shared<const graph::AdjacencyMatrix>(adj),
                                   c.initial_states()),
      40);
  const auto rep = diagnostics::trace_recursion_report(traj, 5, 2, graph::a_min(adj));
  EXPECT_NEAR(rep.d, 54.0, 1e-12);
  EXPECT_EQ(rep.h_prime, 7);
}

TEST(Output, CsvShape) {
  auto c = small_fig1(2);
  std::string csv = harness::errors_csv(harness::run_monte_carlo(c));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mode,sensor,k,mse,stderr");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3 * 5);
  EXPECT_EQ(csv.find("noncooperative") > csv.rfind("distributed,"), true);

  c.mode = harness::Mode::kDistributed;
  const auto art = harness::run_monte_carlo(c);
  EXPECT_FALSE(art.noncooperative);
  csv = harness::errors_csv(art);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 5);
  EXPECT_EQ(csv.find("noncooperative"), std::string::npos);
}

TEST(Output, FullHorizonRowCount) {
  auto c = fig1();
  c.runs = 1;
  const std::string csv = harness::errors_csv(harness::run_monte_carlo(c));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 126);
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dkf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dkf_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }
  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"simulate", "--bogus"}).code, 2);
  EXPECT_EQ(cli({"reproduce-fig1", "--runs", "0"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, BrokenConfigNamesField) {
  const auto cfg = write("bad.cfg", fig1_with("r = 0.1", "r = 0"));
  const auto r = cli({"simulate", "--config", cfg.string(), "--out", (dir_ / "o").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("[r]"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingConfigIsIoError) {
  EXPECT_EQ(cli({"simulate", "--config", (dir_ / "absent.cfg").string()}).code, 5);
}

TEST_F(CliTest, SimulateWritesArtifacts) {
  const auto cfg = write("ok.cfg", std::string(harness::bundled_fig1_config()));
  const fs::path out = dir_ / "out";
  const auto r = cli({"simulate", "--config", cfg.string(), "--runs", "2", "--horizon", "120",
                      "--out", out.string(), "--traces"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"errors.csv", "tracking_errors.svg", "trace.csv", "signal.csv", "xi.csv",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
}

TEST_F(CliTest, VerifySmall) {
  const auto r = cli({"verify", "--instances", "50"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all property suites passed"), std::string::npos);
}

}  // namespace
}  // namespace dkf
