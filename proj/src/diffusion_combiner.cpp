#include "dkf/diffusion_combiner.hpp"

#include "dkf/errors.hpp"

#include <string>

namespace dkf::diffusion {
namespace {

void check_sizes(const NetworkFilterState& net, const signal::ObservationRecord& obs) {
  if (obs.size() != net.size()) {
    throw DimensionError("observation record has " + std::to_string(obs.size()) +
                         " sensors, network has " + std::to_string(net.size()));
  }
}

const graph::AdjacencyMatrix& adjacency_of(const NetworkFilterState& net) {
  if (!net.adjacency) throw ValidationError("network state has no adjacency matrix");
  return *net.adjacency;
}

}  // namespace

NetworkFilterState make_network(std::shared_ptr<const graph::AdjacencyMatrix> adjacency,
                                const std::vector<kalman::SensorFilterState>& sensors) {
  if (!adjacency) throw ValidationError("make_network: adjacency is null");
  if (adjacency->size() != sensors.size()) {
    throw DimensionError("make_network: " + std::to_string(sensors.size()) +
                         " sensor states for a graph of " +
                         std::to_string(adjacency->size()) + " sensors");
  }
  for (const auto& s : sensors) kalman::check_state(s);
  NetworkFilterState net;
  net.sensors = sensors;
  net.adjacency = std::move(adjacency);
  return net;
}

std::vector<CombinedEstimate> combine(std::span<const kalman::AdaptResult> adapted,
                                      const graph::AdjacencyMatrix& adj) {
  const std::size_t n = adj.size();
  if (adapted.size() != n) {
    throw DimensionError("combine: expected " + std::to_string(n) + " adapt results");
  }
  // In-neighbourhoods N_i = {l : a_li > 0}. A sensor whose only in-neighbour
  // is l fuses a single estimate, (a P_bar_l^{-1})^{-1} = P_bar_l / a, so no
  // inversion is needed there.
  std::vector<std::vector<std::size_t>> neighbours(n);
  std::vector<bool> needs_info(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      if (adj(l, i) > 0.0) neighbours[i].push_back(l);
    }
    if (neighbours[i].empty()) {
      throw ValidationError("combine: sensor " + std::to_string(i) + " has no in-neighbour");
    }
    if (neighbours[i].size() > 1) {
      for (std::size_t l : neighbours[i]) needs_info[l] = true;
    }
  }

  std::vector<Matrix> info(n);
  std::vector<Vector> info_state(n);
  for (std::size_t l = 0; l < n; ++l) {
    if (!needs_info[l]) continue;
    try {
      info[l] = linalg::spd_inverse(adapted[l].P_bar, kInformationFloor);
    } catch (const NumericalError& e) {
      throw NumericalError("combine: P_bar of sensor " + std::to_string(l) + ": " +
                           e.what());
    }
    info_state[l] = info[l] * adapted[l].theta_bar;
  }

  std::vector<CombinedEstimate> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbours[i].size() == 1) {
      const std::size_t l = neighbours[i].front();
      out[i].P = adapted[l].P_bar / adj(l, i);
      out[i].theta_hat = adapted[l].theta_bar;
      continue;
    }
    const Eigen::Index m = adapted[i].theta_bar.size();
    Matrix info_sum = Matrix::Zero(m, m);
    Vector state_sum = Vector::Zero(m);
    for (std::size_t l : neighbours[i]) {
      const double a = adj(l, i);
      info_sum += a * info[l];
      state_sum += a * info_state[l];
    }
    try {
      out[i].P = linalg::spd_inverse(info_sum, kInformationFloor);
    } catch (const NumericalError& e) {
      throw NumericalError("combine: information sum of sensor " + std::to_string(i) +
                           ": " + e.what());
    }
    out[i].theta_hat = out[i].P * state_sum;
  }
  return out;
}

NetworkFilterState dkf_step(const NetworkFilterState& net,
                            const signal::ObservationRecord& obs, StepDetail* detail) {
  check_sizes(net, obs);
  const auto& adj = adjacency_of(net);
  std::vector<kalman::AdaptResult> adapted;
  adapted.reserve(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    adapted.push_back(kalman::adapt(net.sensors[i], obs.sensors[i].phi, obs.sensors[i].y));
  }
  auto fused = combine(adapted, adj);
  NetworkFilterState next = net;
  next.k = net.k + 1;
  for (std::size_t i = 0; i < net.size(); ++i) {
    next.sensors[i].theta_hat = std::move(fused[i].theta_hat);
    next.sensors[i].P = std::move(fused[i].P);
  }
  if (detail) detail->adapted = std::move(adapted);
  return next;
}

NetworkFilterState noncoop_network_step(const NetworkFilterState& net,
                                        const signal::ObservationRecord& obs) {
  check_sizes(net, obs);
  NetworkFilterState next = net;
  next.k = net.k + 1;
  for (std::size_t i = 0; i < net.size(); ++i) {
    next.sensors[i] =
        kalman::noncoop_step(net.sensors[i], obs.sensors[i].phi, obs.sensors[i].y);
  }
  return next;
}

Matrix stacked_covariance(const NetworkFilterState& net) {
  std::vector<Matrix> blocks;
  blocks.reserve(net.size());
  for (const auto& s : net.sensors) blocks.push_back(s.P);
  return linalg::block_diagonal(blocks);
}

Vector stacked_estimate(const NetworkFilterState& net) {
  const Eigen::Index m = net.sensors.front().theta_hat.size();
  Vector out(m * static_cast<Eigen::Index>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(i) * m, m) = net.sensors[i].theta_hat;
  }
  return out;
}

NetworkFilterState stacked_step(const NetworkFilterState& net,
                                const signal::ObservationRecord& obs) {
  check_sizes(net, obs);
  const auto& adj = adjacency_of(net);
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::Index m = net.sensors.front().theta_hat.size();
  const Eigen::Index mn = m * n;

  const signal::StackedObservation st = signal::stack(obs);
  const Matrix P = stacked_covariance(net);
  const Vector theta_hat = stacked_estimate(net);
  Vector r(n);
  std::vector<Matrix> q_blocks;
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i) = net.sensors[static_cast<std::size_t>(i)].r;
    q_blocks.push_back(net.sensors[static_cast<std::size_t>(i)].Q);
  }
  const Matrix Q_diag = linalg::block_diagonal(q_blocks);

  // Gain: L = P Phi (R + Phi^T P Phi)^{-1}; the bracket is diagonal.
  const Matrix innovation = Matrix(r.asDiagonal()) + st.Phi.transpose() * P * st.Phi;
  const Matrix L = P * st.Phi * innovation.inverse();

  const Vector theta_bar = theta_hat + L * (st.Y - st.Phi.transpose() * theta_hat);
  const Matrix P_bar = linalg::symmetrize(P - L * st.Phi.transpose() * P + Q_diag);
  const Matrix P_bar_inv = linalg::spd_inverse(P_bar, kInformationFloor);

  // vec{P^{-1}_{k+1}} = A_m^T vec{P_bar^{-1}}, vec stacking the diagonal blocks.
  const Matrix A_m = graph::kron_expand(adj, static_cast<int>(m));
  Matrix vec_bar(mn, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    vec_bar.block(i * m, 0, m, m) = P_bar_inv.block(i * m, i * m, m, m);
  }
  const Matrix vec_next = A_m.transpose() * vec_bar;
  std::vector<Matrix> next_info(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    next_info[static_cast<std::size_t>(i)] = vec_next.block(i * m, 0, m, m);
  }
  const Matrix P_next = linalg::spd_inverse(linalg::block_diagonal(next_info),
                                            kInformationFloor);
  const Vector theta_next = P_next * A_m.transpose() * P_bar_inv * theta_bar;

  NetworkFilterState next = net;
  next.k = net.k + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& s = next.sensors[static_cast<std::size_t>(i)];
    s.theta_hat = theta_next.segment(i * m, m);
    s.P = linalg::symmetrize(P_next.block(i * m, i * m, m, m));
  }
  return next;
}

Trajectory record_trajectory(signal::SignalSource& source, const NetworkFilterState& net,
                             std::size_t steps) {
  Trajectory traj;
  traj.initial = net;
  traj.steps.reserve(steps);
  signal::ObservationRecord current = source.next();
  NetworkFilterState state = net;
  for (std::size_t k = 0; k < steps; ++k) {
    signal::ObservationRecord upcoming = source.next();
    TrajectoryStep step;
    StepDetail detail;
    state = dkf_step(state, current, &detail);
    step.adapted = std::move(detail.adapted);
    step.after = state;
    step.theta_next = upcoming.theta;
    step.delta_next = upcoming.delta;
    step.obs = std::move(current);
    traj.steps.push_back(std::move(step));
    current = std::move(upcoming);
  }
  return traj;
}

double noise_magnitude(const signal::ObservationRecord& obs, const Vector& delta_next) {
  const signal::StackedObservation st = signal::stack(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  return st.V.norm() + delta_next.replicate(n, 1).norm();
}

std::vector<double> noise_magnitudes(const Trajectory& traj) {
  std::vector<double> xi;
  xi.reserve(traj.length());
  for (const auto& step : traj.steps) xi.push_back(noise_magnitude(step.obs, step.delta_next));
  return xi;
}

ErrorRecursionReport error_recursion_check(const Trajectory& traj) {
  if (!traj.has_noise_trace) {
    throw ValidationError("error recursion check: trajectory has no retained noise trace");
  }
  ErrorRecursionReport report;
  if (traj.steps.empty()) return report;

  const auto& adj = adjacency_of(traj.initial);
  const std::size_t n = traj.initial.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::Index m = traj.initial.sensors.front().theta_hat.size();
  const Matrix A_m = graph::kron_expand(adj, static_cast<int>(m));
  const Matrix I_m = Matrix::Identity(m, m);

  // theta_tilde_{0,i} = theta_0 - theta_hat_{0,i}
  const Vector& theta0 = traj.steps.front().obs.theta;
  std::vector<Vector> local(n);
  for (std::size_t i = 0; i < n; ++i) local[i] = theta0 - traj.initial.sensors[i].theta_hat;
  Vector stacked = theta0.replicate(ni, 1) - stacked_estimate(traj.initial);

  for (const auto& step : traj.steps) {
    if (step.obs.size() != n || step.delta_next.size() != m || step.adapted.size() != n) {
      throw ValidationError("error recursion check: incomplete trajectory step");
    }
    // Adapt-phase error: (I - L phi^T) e_k - L v_k + delta_{k+1}.
    std::vector<Vector> bar(n);
    std::vector<Matrix> bar_info(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = step.adapted[i];
      const auto& s = step.obs.sensors[i];
      bar[i] = (I_m - a.gain * s.phi.transpose()) * local[i] - a.gain * s.v + step.delta_next;
      bar_info[i] = linalg::spd_inverse(a.P_bar);
    }
    // Combine-phase error: P_{k+1,i} sum_l a_{li} P_bar_l^{-1} e_bar_l.
    for (std::size_t i = 0; i < n; ++i) {
      Vector acc = Vector::Zero(m);
      for (std::size_t l = 0; l < n; ++l) {
        if (adj(l, i) > 0.0) acc += adj(l, i) * (bar_info[l] * bar[l]);
      }
      local[i] = step.after.sensors[i].P * acc;
    }

    // Stacked form.
    std::vector<Vector> gains;
    std::vector<Matrix> p_bar_blocks;
    for (const auto& a : step.adapted) {
      gains.push_back(a.gain);
      p_bar_blocks.push_back(a.P_bar);
    }
    const signal::StackedObservation st = signal::stack(step.obs);
    const Matrix L = linalg::block_diagonal_columns(gains);
    const Matrix P_bar_inv = linalg::spd_inverse(linalg::block_diagonal(p_bar_blocks));
    const Matrix transfer = stacked_covariance(step.after) * A_m.transpose() * P_bar_inv;
    const Vector Delta_next = step.delta_next.replicate(ni, 1);
    stacked = transfer * (Matrix::Identity(m * ni, m * ni) - L * st.Phi.transpose()) * stacked -
              transfer * L * st.V + transfer * Delta_next;

    // Direct errors at k+1.
    const double scale = 1.0 + step.theta_next.norm();
    for (std::size_t i = 0; i < n; ++i) {
      const Vector direct = step.theta_next - step.after.sensors[i].theta_hat;
      const double d_local = (local[i] - direct).cwiseAbs().maxCoeff();
      const double d_stacked =
          (stacked.segment(static_cast<Eigen::Index>(i) * m, m) - direct).cwiseAbs().maxCoeff();
      report.local_abs = std::max(report.local_abs, d_local);
      report.stacked_abs = std::max(report.stacked_abs, d_stacked);
      report.local_discrepancy = std::max(report.local_discrepancy, d_local / scale);
      report.stacked_discrepancy = std::max(report.stacked_discrepancy, d_stacked / scale);
    }
    ++report.steps;
  }
  return report;
}

}  // namespace dkf::diffusion
