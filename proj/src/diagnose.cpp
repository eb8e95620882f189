#include "dkf/diagnose.hpp"

#include "dkf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <memory>
#include <numeric>

namespace dkf::harness {
namespace {

diffusion::Trajectory trajectory_of(const ExperimentConfig& c, std::uint64_t run) {
  signal::SignalSource source(c.signal, c.seed, run);
  const auto adj = std::make_shared<const graph::AdjacencyMatrix>(c.adjacency);
  return diffusion::record_trajectory(source, diffusion::make_network(adj, c.initial_states()),
                                      static_cast<std::size_t>(c.horizon));
}

}  // namespace

DiagnosticsReport run_diagnostics(const ExperimentConfig& config, int replications) {
  validate_config(config);
  const graph::AdjacencyMatrix adj(config.adjacency);
  graph::require_valid(adj);

  DiagnosticsReport rep;
  rep.h = config.diag_h;
  rep.mc = config.diag_mc;
  rep.horizon = config.horizon;
  rep.replications = std::max(1, std::min(replications, config.runs));

  // Excitation estimates at freeze times 0, stride, 2 stride, ... on run 0.
  {
    signal::SignalSource source(config.signal, config.seed, 0);
    long t = 0;
    for (long freeze = 0; freeze <= config.horizon; freeze += config.record_stride) {
      while (t <= freeze) {
        source.next();
        ++t;
      }
      const auto& gens = source.generators();
      diagnostics::MonteCarloSpec spec{config.diag_h, config.diag_mc, config.seed,
                                       static_cast<std::uint64_t>(freeze)};
      for (std::size_t i = 0; i < gens.size(); ++i) {
        rep.lambdas.push_back({freeze, static_cast<int>(i) + 1,
                               diagnostics::estimate_lambda_single(gens[i], spec,
                                                                   static_cast<std::uint32_t>(i))});
      }
      rep.lambdas.push_back({freeze, 0, diagnostics::estimate_lambda_network(gens, spec)});
    }
  }

  // Decay fit of the contraction sequence over replications.
  std::vector<std::vector<double>> sequences;
  for (int r = 0; r < rep.replications; ++r) {
    sequences.push_back(diagnostics::contraction_sequence(trajectory_of(config, static_cast<std::uint64_t>(r))));
  }
  if (config.horizon >= 2) {
    rep.s0 = diagnostics::s0_decay_fit(sequences, static_cast<int>(std::min<long>(10, config.horizon - 1)));
  }

  // Stability checks along run 0.
  const auto traj = trajectory_of(config, 0);
  for (std::size_t k = 0; k < traj.length(); ++k) {
    const auto c = diagnostics::check_sandwich(traj, k);
    rep.sandwich_information =
        std::max(rep.sandwich_information, -c.information.min_eigenvalue / c.information.scale);
    rep.sandwich_covariance =
        std::max(rep.sandwich_covariance, -c.covariance.min_eigenvalue / c.covariance.scale);
  }
  Vector x = Vector::Ones(config.n * config.m);
  x.normalize();
  rep.sweep = diagnostics::sweep_windows(traj, 0, x);
  rep.inverse_norm_ratio = diagnostics::max_inverse_norm_ratio(traj);
  rep.sup_trace = diagnostics::sup_trace(traj);

  const int D = graph::diameter_or_one(adj);
  if (config.horizon >= 2L * (config.diag_h + D)) {
    rep.has_trace_report = true;
    rep.trace = diagnostics::trace_recursion_report(traj, config.diag_h, D, graph::a_min(adj));
  }

  const auto xi = diffusion::noise_magnitudes(traj);
  if (!xi.empty()) {
    rep.xi_mean = std::accumulate(xi.begin(), xi.end(), 0.0) / static_cast<double>(xi.size());
    rep.xi_max = *std::max_element(xi.begin(), xi.end());
  }
  return rep;
}

std::string format_report(const DiagnosticsReport& r) {
  std::string out;
  out += fmt::format("excitation (h = {}, mc = {}; lambda, std error)\n", r.h, r.mc);
  out += fmt::format("{:>8}", "t");
  int sensors = 0;
  for (const auto& row : r.lambdas) sensors = std::max(sensors, row.sensor);
  for (int i = 1; i <= sensors; ++i) out += fmt::format("  {:>22}", fmt::format("sensor {}", i));
  out += fmt::format("  {:>22}\n", "network");
  for (std::size_t j = 0; j < r.lambdas.size(); j += static_cast<std::size_t>(sensors) + 1) {
    out += fmt::format("{:>8}", r.lambdas[j].t);
    for (int i = 0; i <= sensors; ++i) {
      const auto& e = r.lambdas[j + static_cast<std::size_t>(i)].estimate;
      out += fmt::format("  {:>10.3e} ({:>9.2e})", e.value, e.std_error);
    }
    out += "\n";
  }

  out += fmt::format("\ncontraction sequence a_k = 1/(1 + |Q^-1| |P_bar_k|), {} replications\n",
                     r.replications);
  out += fmt::format("  fitted lambda = {:.6f}, M = {:.6f}{}\n", r.s0.lambda_hat, r.s0.M_hat,
                     r.s0.no_empirical_decay ? "  (no empirical decay)" : "");

  out += "\nstability checks along run 0\n";
  out += fmt::format("  sandwich (information) worst -lambda_min/scale = {:.3e}\n", r.sandwich_information);
  out += fmt::format("  sandwich (covariance)  worst -lambda_min/scale = {:.3e}\n", r.sandwich_covariance);
  out += fmt::format("  product bound worst ratio = {:.6f} over {} windows\n",
                     r.sweep.worst_product_ratio, r.sweep.windows);
  out += fmt::format("  Lyapunov worst relative excess = {:.3e}\n",
                     r.sweep.lyapunov.worst_relative_excess);
  out += fmt::format("  max |P^-1| / |Q^-1| = {:.12f}\n", r.inverse_norm_ratio);
  out += fmt::format("  sup_k Tr(P_k) = {:.6f}\n", r.sup_trace);
  out += fmt::format("  xi_k mean = {:.6f}, max = {:.6f}\n", r.xi_mean, r.xi_max);

  if (r.has_trace_report) {
    const auto& t = r.trace;
    out += fmt::format("\ntrace recursion (h = {}, D = {}, h' = {}, a_min = {:.6f}, d = {:.6f})\n",
                       t.h, t.diameter, t.h_prime, t.a_min, t.d);
    out += fmt::format("  {} block pairs, {} violations, worst T_next/bound = {:.6f}, T_1 = {:.6f}\n",
                       t.blocks.size(), t.violations, t.worst_ratio, t.first_block);
  } else {
    out += "\ntrace recursion: horizon shorter than two blocks, skipped\n";
  }
  return out;
}

std::string lambda_csv(const DiagnosticsReport& r) {
  std::string out = "t,sensor,lambda,std_error,lower_3sigma\n";
  for (const auto& row : r.lambdas) {
    out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", row.t,
                       row.sensor == 0 ? std::string("network") : std::to_string(row.sensor),
                       row.estimate.value, row.estimate.std_error, row.estimate.lower_bound(3.0));
  }
  return out;
}

std::string trace_blocks_csv(const DiagnosticsReport& r) {
  std::string out = "s,T_s,T_next,b,c1,c2,bound,violated\n";
  for (const auto& b : r.trace.blocks) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", b.s, b.T_s,
                       b.T_next, b.b, b.c1, b.c2, b.bound, b.violated ? 1 : 0);
  }
  return out;
}

}  // namespace dkf::harness
