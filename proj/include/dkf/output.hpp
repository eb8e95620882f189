#pragma once

// Files written by the harness. errors.csv is the contractual output; the
// SVG figure is presentation only.

#include "dkf/monte_carlo.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dkf::harness {

/// `mode,sensor,k,mse,stderr` rows sorted by (mode, sensor, k); distributed
/// sorts before noncooperative, sensors are 1-based, numbers use %.17g.
std::string errors_csv(const RunArtifact& artifact);

/// Writes errors_csv to `path`. Throws IoError on failure.
void export_csv(const RunArtifact& artifact, const std::filesystem::path& path);

/// Two stacked panels (non-cooperative above, distributed below) of
/// per-sensor MSE against k. `log_scale` selects a logarithmic y axis.
std::string plot_svg(const RunArtifact& artifact, bool log_scale);

/// True when the positive MSE values span more than three decades.
bool wants_log_plot(const RunArtifact& artifact);

/// Writes `<stem>.svg` and, when wants_log_plot, `<stem>_log.svg` into `dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_plot(const RunArtifact& artifact,
                                             const std::filesystem::path& dir,
                                             const std::string& stem = "fig1");

/// trace.csv: mode,k,sensor,theta_hat_1..m,trace_P,err_sq.
void export_trace_csv(const RunTrace& trace, int m, const std::filesystem::path& path);

/// signal.csv: k,sensor,y,phi_1..m,theta_1..m.
void export_signal_csv(const RunTrace& trace, int m, const std::filesystem::path& path);

/// xi.csv: k,xi.
void export_xi_csv(const RunTrace& trace, const std::filesystem::path& path);

/// manifest.json binding the outputs to the config hash and seed.
void export_manifest(const RunArtifact& artifact, const ExperimentConfig& config,
                     const std::vector<std::filesystem::path>& files,
                     const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dkf::harness
