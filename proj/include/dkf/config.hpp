#pragma once

// Experiment configuration: a flat `key = value` text format.
//
//   # comment
//   n = 3
//   adjacency = [[1/3, 2/3, 0],
//                [0, 1/3, 2/3],
//                [2/3, 0, 1/3]]
//   sensor.*.B = [1, 0, 0]         # default for every sensor
//   sensor.2.C = [[0,0,0],[1,0,0],[0,0,0]]
//
// Values are numbers (fractions such as 1/3 allowed), bare words, or nested
// bracketed lists; a list may span several lines. The full schema is in
// docs/config.md.

#include "dkf/graph_topology.hpp"
#include "dkf/kalman_core.hpp"
#include "dkf/signal_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dkf::harness {

enum class Mode { kDistributed, kNoncooperative, kBoth };

std::string_view mode_name(Mode mode);
bool includes_distributed(Mode mode);
bool includes_noncooperative(Mode mode);

enum class NoiseScale { kVariance, kStdDev };

struct ExperimentConfig {
  int n = 0;
  int m = 0;
  Matrix adjacency;
  signal::SignalSpec signal;
  std::vector<double> r;
  Matrix Q;
  std::vector<Matrix> P0;
  std::vector<Vector> theta_hat0;

  long horizon = 2000;
  int runs = 500;
  long record_stride = 100;
  std::uint64_t seed = 1;
  Mode mode = Mode::kBoth;
  int workers = 1;
  NoiseScale noise_scale = NoiseScale::kVariance;

  int diag_h = 5;
  int diag_mc = 1000;
  bool retain_traces = false;

  /// Initial filter state of sensor i.
  kalman::SensorFilterState initial_state(int i) const;
  std::vector<kalman::SensorFilterState> initial_states() const;
  graph::AdjacencyMatrix graph() const { return graph::AdjacencyMatrix(adjacency); }
};

/// Parses and validates configuration text.
ExperimentConfig parse_config(std::string_view text);

/// Reads `path` and parses it. I/O failures raise IoError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Re-checks cross-field invariants (dimensions, K >= 1, M >= 1, graph).
void validate_config(const ExperimentConfig& config);

/// Canonical serialisation (17 significant digits) used for hashing.
std::string canonical_text(const ExperimentConfig& config);

/// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Recorded time indices: 1, stride, 2*stride, ..., horizon.
std::vector<long> record_schedule(long horizon, long stride);

/// Text of the bundled three-sensor example (configs/fig1.cfg).
std::string_view bundled_fig1_config();

}  // namespace dkf::harness
