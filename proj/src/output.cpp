#include "dkf/output.hpp"

#include "dkf/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace dkf::harness {
namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace {

void append_series(std::string& out, const char* mode, const TrackingErrorSeries& s) {
  for (std::size_t i = 0; i < s.sensors(); ++i) {
    for (std::size_t j = 0; j < s.ks.size(); ++j) {
      out += fmt::format("{},{},{},{:.17g},{:.17g}\n", mode, i + 1, s.ks[j], s.mse[i][j],
                         s.std_error[i][j]);
    }
  }
}

}  // namespace

std::string errors_csv(const RunArtifact& artifact) {
  std::string out = "mode,sensor,k,mse,stderr\n";
  if (artifact.distributed) append_series(out, "distributed", *artifact.distributed);
  if (artifact.noncooperative) append_series(out, "noncooperative", *artifact.noncooperative);
  return out;
}

void export_csv(const RunArtifact& artifact, const fs::path& path) {
  write_text_file(path, errors_csv(artifact));
}

// ---------------------------------------------------------------------------
// SVG figure

namespace {

constexpr double kWidth = 760, kPanelHeight = 300, kLeft = 80, kRight = 130, kTop = 40,
                 kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

struct Panel {
  const char* title;
  const TrackingErrorSeries* series;
};

std::vector<Panel> panels_of(const RunArtifact& a) {
  std::vector<Panel> p;
  if (a.noncooperative) p.push_back({"Non-cooperative KF", &*a.noncooperative});
  if (a.distributed) p.push_back({"Distributed KF", &*a.distributed});
  return p;
}

std::string tick_label(double v) {
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  if (a >= 1e4 || a < 1e-2) return fmt::format("{:.0e}", v);
  return fmt::format("{:.3g}", v);
}

/// Round step for linear ticks covering [lo, hi].
double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    if (f * mag >= raw) return f * mag;
  }
  return 10.0 * mag;
}

void draw_panel(std::string& svg, const Panel& panel, double y0, bool log_scale) {
  const auto& s = *panel.series;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  const double x_lo = static_cast<double>(s.ks.front());
  const double x_hi = std::max(x_lo + 1.0, static_cast<double>(s.ks.back()));

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& row : s.mse) {
    for (double v : row) {
      if (!std::isfinite(v)) continue;
      hi = std::max(hi, v);
      if (v > 0.0) lo = std::min(lo, v);
    }
  }
  if (!std::isfinite(lo)) lo = 1e-3;
  if (hi <= 0.0) hi = 1.0;

  double y_lo, y_hi;
  if (log_scale) {
    y_lo = std::floor(std::log10(lo));
    y_hi = std::ceil(std::log10(hi));
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  } else {
    y_lo = 0.0;
    const double step = nice_step(hi);
    y_hi = std::ceil(hi / step) * step;
  }
  auto X = [&](double k) { return kLeft + (k - x_lo) / (x_hi - x_lo) * plot_w; };
  auto Y = [&](double v) {
    const double t = log_scale ? std::log10(std::max(v, std::pow(10.0, y_lo))) : v;
    return y0 + kTop + (1.0 - (t - y_lo) / (y_hi - y_lo)) * plot_h;
  };

  svg += fmt::format(R"svg(<text x="{}" y="{}" font-size="15" text-anchor="middle">{}</text>)svg" "\n",
                     kLeft + plot_w / 2, y0 + kTop - 12, panel.title);
  svg += fmt::format(R"svg(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)svg" "\n",
                     kLeft, y0 + kTop, plot_w, plot_h);

  if (log_scale) {
    for (double e = y_lo; e <= y_hi + 1e-9; e += 1.0) {
      const double y = Y(std::pow(10.0, e));
      svg += fmt::format(R"svg(<line x1="{}" y1="{:.2f}" x2="{}" y2="{:.2f}" stroke="#ddd"/>)svg" "\n",
                         kLeft, y, kLeft + plot_w, y);
      svg += fmt::format(R"svg(<text x="{}" y="{:.2f}" font-size="11" text-anchor="end">1e{}</text>)svg" "\n",
                         kLeft - 6, y + 4, static_cast<int>(e));
    }
  } else {
    const double step = nice_step(y_hi);
    for (double v = 0.0; v <= y_hi + 1e-9 * y_hi; v += step) {
      const double y = Y(v);
      svg += fmt::format(R"svg(<line x1="{}" y1="{:.2f}" x2="{}" y2="{:.2f}" stroke="#ddd"/>)svg" "\n",
                         kLeft, y, kLeft + plot_w, y);
      svg += fmt::format(R"svg(<text x="{}" y="{:.2f}" font-size="11" text-anchor="end">{}</text>)svg" "\n",
                         kLeft - 6, y + 4, tick_label(v));
    }
  }
  const double x_step = nice_step(x_hi - x_lo + 1.0);
  for (double k = 0.0; k <= x_hi + 1e-9; k += x_step) {
    if (k < x_lo) continue;
    svg += fmt::format(R"svg(<text x="{:.2f}" y="{}" font-size="11" text-anchor="middle">{}</text>)svg" "\n",
                       X(k), y0 + kTop + plot_h + 16, tick_label(k));
  }
  svg += fmt::format(R"svg(<text x="{}" y="{}" font-size="12" text-anchor="middle">k</text>)svg" "\n",
                     kLeft + plot_w / 2, y0 + kTop + plot_h + 34);
  svg += fmt::format(
      R"svg(<text x="20" y="{:.2f}" font-size="12" text-anchor="middle" transform="rotate(-90 20 {:.2f})">MSE</text>)svg" "\n",
      y0 + kTop + plot_h / 2, y0 + kTop + plot_h / 2);

  for (std::size_t i = 0; i < s.sensors(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string pts;
    for (std::size_t j = 0; j < s.ks.size(); ++j) {
      const double v = s.mse[i][j];
      if (!std::isfinite(v)) continue;
      pts += fmt::format("{:.2f},{:.2f} ", X(static_cast<double>(s.ks[j])), Y(v));
    }
    svg += fmt::format(R"svg(<polyline fill="none" stroke="{}" stroke-width="1.6" points="{}"/>)svg" "\n",
                       color, pts);
    const double ly = y0 + kTop + 14 + 18 * static_cast<double>(i);
    svg += fmt::format(R"svg(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)svg" "\n",
                       kLeft + plot_w + 12, ly, kLeft + plot_w + 36, ly, color);
    svg += fmt::format(R"svg(<text x="{}" y="{}" font-size="12">sensor {}</text>)svg" "\n",
                       kLeft + plot_w + 42, ly + 4, i + 1);
  }
}

}  // namespace

bool wants_log_plot(const RunArtifact& artifact) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : panels_of(artifact)) {
    for (const auto& row : p.series->mse) {
      for (double v : row) {
        if (!std::isfinite(v) || v <= 0.0) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  return std::isfinite(lo) && hi / lo > 1e3;
}

std::string plot_svg(const RunArtifact& artifact, bool log_scale) {
  const auto panels = panels_of(artifact);
  const double height = kPanelHeight * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string svg = fmt::format(
      R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">)svg" "\n"
      R"svg(<rect width="100%" height="100%" fill="white"/>)svg" "\n",
      kWidth, height, kWidth, height);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    draw_panel(svg, panels[p], kPanelHeight * static_cast<double>(p), log_scale);
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<fs::path> emit_plot(const RunArtifact& artifact, const fs::path& dir,
                                const std::string& stem) {
  std::vector<fs::path> written;
  written.push_back(dir / (stem + ".svg"));
  write_text_file(written.back(), plot_svg(artifact, false));
  if (wants_log_plot(artifact)) {
    written.push_back(dir / (stem + "_log.svg"));
    write_text_file(written.back(), plot_svg(artifact, true));
  }
  return written;
}

// ---------------------------------------------------------------------------
// Traces and manifest

namespace {

std::string columns(const char* prefix, int m) {
  std::string out;
  for (int j = 1; j <= m; ++j) out += fmt::format(",{}_{}", prefix, j);
  return out;
}

std::string values(const Vector& v) {
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) out += fmt::format(",{:.17g}", v(j));
  return out;
}

void append_trace(std::string& out, const char* mode, const std::vector<TraceRow>& rows) {
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}{},{:.17g},{:.17g}\n", mode, r.k, r.sensor + 1,
                       values(r.theta_hat), r.trace_P, r.err_sq);
  }
}

}  // namespace

void export_trace_csv(const RunTrace& trace, int m, const fs::path& path) {
  std::string out = "mode,k,sensor" + columns("theta_hat", m) + ",trace_P,err_sq\n";
  append_trace(out, "distributed", trace.distributed);
  append_trace(out, "noncooperative", trace.noncooperative);
  write_text_file(path, out);
}

void export_signal_csv(const RunTrace& trace, int m, const fs::path& path) {
  std::string out = "k,sensor,y" + columns("phi", m) + columns("theta", m) + "\n";
  for (const auto& r : trace.signal) {
    out += fmt::format("{},{},{:.17g}{}{}\n", r.k, r.sensor + 1, r.y, values(r.phi),
                       values(r.theta));
  }
  write_text_file(path, out);
}

void export_xi_csv(const RunTrace& trace, const fs::path& path) {
  std::string out = "k,xi\n";
  for (std::size_t k = 0; k < trace.xi.size(); ++k) {
    out += fmt::format("{},{:.17g}\n", k, trace.xi[k]);
  }
  write_text_file(path, out);
}

void export_manifest(const RunArtifact& artifact, const ExperimentConfig& config,
                     const std::vector<fs::path>& files, const fs::path& path) {
  nlohmann::ordered_json j;
  j["config_hash"] = fmt::format("{:016x}", artifact.config_hash);
  j["seed"] = artifact.seed;
  j["runs"] = artifact.runs;
  j["horizon"] = artifact.horizon;
  j["record_stride"] = config.record_stride;
  j["mode"] = std::string(mode_name(config.mode));
  j["sensors"] = config.n;
  j["dimension"] = config.m;
  j["noise_scale"] = config.noise_scale == NoiseScale::kVariance ? "variance" : "std";
  auto& out = j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) out.push_back(f.filename().string());
  j["config"] = canonical_text(config);
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace dkf::harness
