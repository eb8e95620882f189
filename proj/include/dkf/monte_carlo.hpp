#pragma once

// Monte Carlo orchestration: M independent runs sharing initial states, with
// per-run random streams addressed by (seed, run). Both filters of a run see
// the same observations.

#include "dkf/config.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dkf::harness {

struct TrackingErrorSeries {
  std::vector<long> ks;
  /// mse[i][j]: mean over runs of |theta_hat_{k_j,i} - theta_{k_j}|^2.
  std::vector<std::vector<double>> mse;
  /// Monte Carlo standard error of mse[i][j] (0 when M = 1).
  std::vector<std::vector<double>> std_error;

  std::size_t sensors() const { return mse.size(); }
};

/// Squared errors of one run at the recorded indices, [sensor][index].
using RunErrors = std::vector<std::vector<double>>;

struct TraceRow {
  long k = 0;
  int sensor = 0;
  Vector theta_hat;
  double trace_P = 0.0;
  double err_sq = 0.0;
};

struct SignalRow {
  long k = 0;
  int sensor = 0;
  double y = 0.0;
  Vector phi;
  Vector theta;
};

/// Per-step detail of one run; only kept when retain_traces is set.
struct RunTrace {
  std::vector<TraceRow> distributed;
  std::vector<TraceRow> noncooperative;
  std::vector<SignalRow> signal;
  /// xi_k = |V_k| + |Delta_{k+1}| for k = 0..K-1.
  std::vector<double> xi;
};

struct RunResult {
  std::optional<RunErrors> distributed;
  std::optional<RunErrors> noncooperative;
  std::optional<RunTrace> trace;
};

/// Simulates run `run` of `config` over the horizon.
RunResult simulate_run(const ExperimentConfig& config, std::uint64_t run, bool keep_trace);

/// Arithmetic mean and standard error over runs, summed in run order.
TrackingErrorSeries aggregate(const std::vector<long>& ks,
                              const std::vector<const RunErrors*>& runs);

struct RunArtifact {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int runs = 0;
  long horizon = 0;
  std::optional<TrackingErrorSeries> distributed;
  std::optional<TrackingErrorSeries> noncooperative;
  /// Trace of run 0 when the config retains traces.
  std::optional<RunTrace> trace;
};

/// Executes config.runs runs on config.workers threads. The result does not
/// depend on the worker count. Numerical failures are re-raised with the run
/// index prepended.
RunArtifact run_monte_carlo(const ExperimentConfig& config);

}  // namespace dkf::harness
