#pragma once

// The `diagnose` report: excitation estimates over time, the decay fit of the
// contraction sequence, and the stability checks along run 0 of a config.

#include "dkf/config.hpp"
#include "dkf/excitation_diagnostics.hpp"

#include <string>
#include <vector>

namespace dkf::harness {

struct LambdaRow {
  long t = 0;        // freeze time
  int sensor = 0;    // 1-based; 0 for the network estimate
  diagnostics::LambdaEstimate estimate;
};

struct DiagnosticsReport {
  int h = 0;
  int mc = 0;
  long horizon = 0;
  int replications = 0;
  std::vector<LambdaRow> lambdas;
  diagnostics::S0Diagnostic s0;
  /// Worst normalised violation (-lambda_min / scale) over all steps.
  double sandwich_information = 0.0;
  double sandwich_covariance = 0.0;
  diagnostics::WindowSweep sweep;
  double inverse_norm_ratio = 0.0;
  double sup_trace = 0.0;
  bool has_trace_report = false;
  diagnostics::TraceRecursionReport trace;
  double xi_mean = 0.0;
  double xi_max = 0.0;
};

/// Runs every diagnostic on `config` with its diag_h / diag_mc settings.
/// Requires a strongly connected, balanced graph.
DiagnosticsReport run_diagnostics(const ExperimentConfig& config, int replications = 20);

std::string format_report(const DiagnosticsReport& report);

/// t,sensor,lambda,std_error,lower_3sigma (sensor "network" for the joint estimate).
std::string lambda_csv(const DiagnosticsReport& report);

/// s,T_s,T_next,b,c1,c2,bound,violated
std::string trace_blocks_csv(const DiagnosticsReport& report);

}  // namespace dkf::harness
