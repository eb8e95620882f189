#include "dkf/cli.hpp"

#include "dkf/diagnose.hpp"
#include "dkf/errors.hpp"
#include "dkf/monte_carlo.hpp"
#include "dkf/output.hpp"
#include "dkf/property_suite.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <optional>
#include <ostream>

namespace dkf {
namespace {
namespace fs = std::filesystem;
using harness::ExperimentConfig;

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DKF_OUT_DIR"); env && *env) return env;
  return "out";
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> runs;
  std::optional<long> horizon;
  bool traces = false;

  void apply(ExperimentConfig& c) const {
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (runs) c.runs = *runs;
    if (horizon) c.horizon = *horizon;
    if (traces) c.retain_traces = true;
    harness::validate_config(c);
  }
};

void add_run_options(CLI::App* cmd, RunOverrides& o, std::string& out_dir) {
  cmd->add_option("--out", out_dir, "Output directory (default $DKF_OUT_DIR or ./out)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--runs", o.runs, "Monte Carlo runs M")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "Steps K")->check(CLI::PositiveNumber);
}

void print_summary(const harness::RunArtifact& art, std::ostream& out) {
  auto show = [&](const char* name, const harness::TrackingErrorSeries& s) {
    out << fmt::format("{} (k = {}):", name, s.ks.back());
    for (std::size_t i = 0; i < s.sensors(); ++i) {
      out << fmt::format("  sensor {} mse {:.4g}", i + 1, s.mse[i].back());
    }
    out << "\n";
  };
  if (art.noncooperative) show("noncooperative", *art.noncooperative);
  if (art.distributed) show("distributed   ", *art.distributed);
}

int do_simulate(ExperimentConfig config, const fs::path& dir, const std::string& plot_stem,
                std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const harness::RunArtifact art = harness::run_monte_carlo(config);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<fs::path> files{dir / "errors.csv"};
  harness::export_csv(art, files.front());
  for (auto& p : harness::emit_plot(art, dir, plot_stem)) files.push_back(p);
  if (art.trace) {
    files.push_back(dir / "trace.csv");
    harness::export_trace_csv(*art.trace, config.m, files.back());
    files.push_back(dir / "signal.csv");
    harness::export_signal_csv(*art.trace, config.m, files.back());
    files.push_back(dir / "xi.csv");
    harness::export_xi_csv(*art.trace, files.back());
  }
  harness::export_manifest(art, config, files, dir / "manifest.json");

  out << fmt::format("{} runs x {} steps in {:.1f} s (config {:016x}, seed {})\n", art.runs,
                     art.horizon, secs, art.config_hash, art.seed);
  print_summary(art, out);
  for (const auto& f : files) out << "wrote " << f.string() << "\n";
  out << "wrote " << (dir / "manifest.json").string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion distributed Kalman filter: simulation, diagnostics, property checks",
               "dkf"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  RunOverrides overrides;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of a config file");
  simulate->add_option("--config", config_path, "Config file")->required();
  add_run_options(simulate, overrides, out_dir);
  simulate->add_flag("--traces", overrides.traces, "Write per-step traces of run 0");

  auto* reproduce = app.add_subcommand("reproduce-fig1", "Run the bundled three-sensor example");
  add_run_options(reproduce, overrides, out_dir);

  auto* diagnose = app.add_subcommand("diagnose", "Excitation estimates and stability checks");
  diagnose->set_help_flag("--help", "Print this help message and exit");
  std::optional<int> diag_h, diag_mc;
  int replications = 20;
  diagnose->add_option("--config", config_path, "Config file")->required();
  diagnose->add_option("--h", diag_h, "Excitation window length")->check(CLI::PositiveNumber);
  diagnose->add_option("--mc", diag_mc, "Monte Carlo futures per estimate")->check(CLI::PositiveNumber);
  diagnose->add_option("--replications", replications, "Runs for the decay fit")
      ->check(CLI::PositiveNumber);
  diagnose->add_option("--out", out_dir, "Output directory (default $DKF_OUT_DIR or ./out)");

  auto* verify = app.add_subcommand("verify", "Run the randomised property suites");
  std::size_t instances = 10000;
  std::uint64_t verify_seed = 1;
  verify->add_option("--instances", instances, "Instances per matrix suite")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "Seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return static_cast<int>(ErrorCategory::kUsage);
  }

  try {
    if (simulate->parsed()) {
      ExperimentConfig config = harness::load_config(config_path);
      overrides.apply(config);
      return do_simulate(std::move(config), output_dir(out_dir), "tracking_errors", out);
    }
    if (reproduce->parsed()) {
      ExperimentConfig config = harness::parse_config(harness::bundled_fig1_config());
      overrides.apply(config);
      return do_simulate(std::move(config), output_dir(out_dir), "fig1", out);
    }
    if (diagnose->parsed()) {
      ExperimentConfig config = harness::load_config(config_path);
      if (diag_h) config.diag_h = *diag_h;
      if (diag_mc) config.diag_mc = *diag_mc;
      const auto report = harness::run_diagnostics(config, replications);
      const std::string text = harness::format_report(report);
      out << text;
      const fs::path dir = output_dir(out_dir);
      harness::write_text_file(dir / "diagnostics.txt", text);
      harness::write_text_file(dir / "lambda.csv", harness::lambda_csv(report));
      if (report.has_trace_report) {
        harness::write_text_file(dir / "trace_blocks.csv", harness::trace_blocks_csv(report));
      }
      out << "wrote " << (dir / "diagnostics.txt").string() << "\n";
      return 0;
    }
    if (verify->parsed()) {
      bool ok = true;
      for (const auto& r : verify::run_all(instances, verify_seed)) {
        out << verify::summary_line(r) << "\n";
        ok = ok && r.passed();
      }
      out << (ok ? "all property suites passed\n" : "property suite failures\n");
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return static_cast<int>(ErrorCategory::kUsage);
}

}  // namespace dkf
