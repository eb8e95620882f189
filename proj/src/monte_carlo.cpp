#include "dkf/monte_carlo.hpp"

#include "dkf/diffusion_combiner.hpp"
#include "dkf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

namespace dkf::harness {
namespace {

void record_errors(const diffusion::NetworkFilterState& net, const Vector& theta,
                   std::size_t idx, RunErrors& out) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    out[i][idx] = (net.sensors[i].theta_hat - theta).squaredNorm();
  }
}

void record_trace(const diffusion::NetworkFilterState& net, const Vector& theta, long k,
                  std::vector<TraceRow>& rows) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& s = net.sensors[i];
    rows.push_back({k, static_cast<int>(i), s.theta_hat, s.P.trace(),
                    (s.theta_hat - theta).squaredNorm()});
  }
}

}  // namespace

RunResult simulate_run(const ExperimentConfig& config, std::uint64_t run, bool keep_trace) {
  const std::vector<long> ks = record_schedule(config.horizon, config.record_stride);
  const auto n = static_cast<std::size_t>(config.n);
  const bool dist = includes_distributed(config.mode);
  const bool nonc = includes_noncooperative(config.mode);

  const auto adj = std::make_shared<const graph::AdjacencyMatrix>(config.adjacency);
  const auto priors = config.initial_states();
  diffusion::NetworkFilterState dkf_net = diffusion::make_network(adj, priors);
  diffusion::NetworkFilterState nc_net = dkf_net;

  RunResult result;
  const RunErrors blank(n, std::vector<double>(ks.size(), 0.0));
  if (dist) result.distributed = blank;
  if (nonc) result.noncooperative = blank;
  if (keep_trace) result.trace.emplace();

  signal::SignalSource source(config.signal, config.seed, run);
  signal::ObservationRecord obs = source.next();
  std::size_t idx = 0;
  for (long k = 0;; ++k) {
    if (idx < ks.size() && ks[idx] == k) {
      if (dist) record_errors(dkf_net, obs.theta, idx, *result.distributed);
      if (nonc) record_errors(nc_net, obs.theta, idx, *result.noncooperative);
      ++idx;
    }
    if (keep_trace) {
      RunTrace& t = *result.trace;
      if (dist) record_trace(dkf_net, obs.theta, k, t.distributed);
      if (nonc) record_trace(nc_net, obs.theta, k, t.noncooperative);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = obs.sensors[i];
        t.signal.push_back({k, static_cast<int>(i), s.y, s.phi, obs.theta});
      }
    }
    if (k == config.horizon) break;

    try {
      if (dist) dkf_net = diffusion::dkf_step(dkf_net, obs);
      if (nonc) nc_net = diffusion::noncoop_network_step(nc_net, obs);
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("run {}, step {}: {}", run, k, e.what()));
    }
    signal::ObservationRecord next = source.next();
    if (keep_trace) result.trace->xi.push_back(diffusion::noise_magnitude(obs, next.delta));
    obs = std::move(next);
  }
  return result;
}

TrackingErrorSeries aggregate(const std::vector<long>& ks,
                              const std::vector<const RunErrors*>& runs) {
  if (runs.empty()) throw ValidationError("aggregate: no runs");
  const std::size_t n = runs.front()->size();
  const std::size_t len = ks.size();
  const auto M = static_cast<double>(runs.size());

  TrackingErrorSeries s;
  s.ks = ks;
  s.mse.assign(n, std::vector<double>(len, 0.0));
  s.std_error.assign(n, std::vector<double>(len, 0.0));
  for (const RunErrors* r : runs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < len; ++j) s.mse[i][j] += (*r)[i][j];
    }
  }
  for (auto& row : s.mse) {
    for (double& x : row) x /= M;
  }
  if (runs.size() > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < len; ++j) {
        double ss = 0.0;
        for (const RunErrors* r : runs) {
          const double d = (*r)[i][j] - s.mse[i][j];
          ss += d * d;
        }
        s.std_error[i][j] = std::sqrt(ss / (M - 1.0) / M);
      }
    }
  }
  return s;
}

RunArtifact run_monte_carlo(const ExperimentConfig& config) {
  validate_config(config);
  const auto M = static_cast<std::size_t>(config.runs);
  std::vector<RunResult> results(M);
  std::vector<std::exception_ptr> failures(M);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t run = next++; run < M && !failed; run = next++) {
      try {
        results[run] = simulate_run(config, run, config.retain_traces && run == 0);
      } catch (...) {
        failures[run] = std::current_exception();
        failed = true;
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), M);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  RunArtifact art;
  art.config_hash = config_hash(config);
  art.seed = config.seed;
  art.runs = config.runs;
  art.horizon = config.horizon;
  const std::vector<long> ks = record_schedule(config.horizon, config.record_stride);
  std::vector<const RunErrors*> dist, nonc;
  for (const auto& r : results) {
    if (r.distributed) dist.push_back(&*r.distributed);
    if (r.noncooperative) nonc.push_back(&*r.noncooperative);
  }
  if (!dist.empty()) art.distributed = aggregate(ks, dist);
  if (!nonc.empty()) art.noncooperative = aggregate(ks, nonc);
  if (config.retain_traces) art.trace = std::move(results.front().trace);
  return art;
}

}  // namespace dkf::harness
