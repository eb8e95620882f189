#pragma once

// Diffusion distributed Kalman filter: local adapt followed by one
// covariance-intersection combine per time step,
//
//   P_{k+1,i}^{-1}     = sum_{l in N_i} a_{li} P_bar_{k+1,l}^{-1}
//   theta_hat_{k+1,i}  = P_{k+1,i} sum_{l in N_i} a_{li} P_bar_{k+1,l}^{-1} theta_bar_{k+1,l}
//
// plus an independent stacked (mn-dimensional) implementation and the
// tracking-error recursions used to cross-check it.

#include "dkf/graph_topology.hpp"
#include "dkf/kalman_core.hpp"
#include "dkf/signal_model.hpp"

#include <algorithm>
#include <memory>
#include <span>
#include <vector>

namespace dkf::diffusion {

/// Smallest eigenvalue accepted for a per-sensor information sum.
inline constexpr double kInformationFloor = 1e-14;

struct NetworkFilterState {
  long k = 0;
  std::vector<kalman::SensorFilterState> sensors;
  std::shared_ptr<const graph::AdjacencyMatrix> adjacency;

  std::size_t size() const { return sensors.size(); }
};

/// Checks every sensor state and that their count matches the graph.
NetworkFilterState make_network(std::shared_ptr<const graph::AdjacencyMatrix> adjacency,
                                const std::vector<kalman::SensorFilterState>& sensors);

struct CombinedEstimate {
  Vector theta_hat;
  Matrix P;
};

/// Covariance-intersection fusion over in-neighbours (column i of A, a_{li} > 0).
std::vector<CombinedEstimate> combine(std::span<const kalman::AdaptResult> adapted,
                                      const graph::AdjacencyMatrix& adj);

/// Per-sensor adapt results of the last step; filled by dkf_step on request.
struct StepDetail {
  std::vector<kalman::AdaptResult> adapted;
};

NetworkFilterState dkf_step(const NetworkFilterState& net,
                            const signal::ObservationRecord& obs,
                            StepDetail* detail = nullptr);

/// Non-cooperative filter applied to every sensor; the adjacency is ignored.
NetworkFilterState noncoop_network_step(const NetworkFilterState& net,
                                        const signal::ObservationRecord& obs);

/// The same update evaluated in stacked block form with (mn x mn) matrices.
/// Exists as an oracle for dkf_step.
NetworkFilterState stacked_step(const NetworkFilterState& net,
                                const signal::ObservationRecord& obs);

/// Stacked views of one network state.
Matrix stacked_covariance(const NetworkFilterState& net);
Vector stacked_estimate(const NetworkFilterState& net);

/// A full filter run with everything needed to re-derive it afterwards.
struct TrajectoryStep {
  signal::ObservationRecord obs;                // theta_k, phi_k, y_k, v_k
  Vector theta_next;                            // theta_{k+1}
  Vector delta_next;                            // delta_{k+1}
  std::vector<kalman::AdaptResult> adapted;     // theta_bar, P_bar (k+1), L_k
  NetworkFilterState after;                     // state at k+1
};

struct Trajectory {
  NetworkFilterState initial;
  std::vector<TrajectoryStep> steps;
  bool has_noise_trace = true;

  std::size_t length() const { return steps.size(); }
  /// Network state at time k (0 <= k <= length()).
  const NetworkFilterState& state_at(std::size_t k) const {
    return k == 0 ? initial : steps[k - 1].after;
  }
};

/// Drives `net` for `steps` iterations with records drawn from `source`.
Trajectory record_trajectory(signal::SignalSource& source, const NetworkFilterState& net,
                             std::size_t steps);

/// xi_k = ||V_k|| + ||Delta_{k+1}|| for one step.
double noise_magnitude(const signal::ObservationRecord& obs, const Vector& delta_next);

/// noise_magnitude for every recorded step.
std::vector<double> noise_magnitudes(const Trajectory& traj);

struct ErrorRecursionReport {
  /// max_k |recursion - direct| / (1 + ||theta_k||) for the per-sensor form.
  double local_discrepancy = 0.0;
  /// Same for the stacked form.
  double stacked_discrepancy = 0.0;
  /// Raw (unnormalised) maxima.
  double local_abs = 0.0;
  double stacked_abs = 0.0;
  std::size_t steps = 0;

  double worst() const { return std::max(local_discrepancy, stacked_discrepancy); }
};

/// Propagates the tracking errors through their closed-form recursions and
/// compares them with direct subtraction theta_k - theta_hat_{k,i}.
/// Throws ValidationError when the trajectory carries no noise trace.
ErrorRecursionReport error_recursion_check(const Trajectory& traj);

}  // namespace dkf::diffusion
