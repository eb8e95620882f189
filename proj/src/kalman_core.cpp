#include "dkf/kalman_core.hpp"

#include "dkf/errors.hpp"

#include <cmath>

namespace dkf::kalman {

void check_state(const SensorFilterState& state) {
  const Eigen::Index m = state.theta_hat.size();
  if (state.P.rows() != m || state.P.cols() != m || state.Q.rows() != m ||
      state.Q.cols() != m) {
    throw DimensionError("filter state: P and Q must be " + std::to_string(m) + "x" +
                         std::to_string(m));
  }
  if (!(state.r > 0.0)) throw ValidationError("filter state: r must be positive");
  if (!linalg::is_symmetric(state.P, 1e-12) || !(linalg::min_eigenvalue(state.P) > 0.0)) {
    throw ValidationError("filter state: P must be symmetric positive definite");
  }
  if (!linalg::is_symmetric(state.Q, 1e-12) || !(linalg::min_eigenvalue(state.Q) > 0.0)) {
    throw ValidationError("filter state: Q must be symmetric positive definite");
  }
}

Vector gain(const SensorFilterState& state, const Vector& phi) {
  if (phi.size() != state.theta_hat.size()) {
    throw DimensionError("gain: regressor dimension mismatch");
  }
  const Vector p_phi = state.P * phi;
  return p_phi / (state.r + phi.dot(p_phi));
}

double gain_bound(const SensorFilterState& state) {
  return std::sqrt(linalg::spectral_norm(state.P)) / (2.0 * std::sqrt(state.r));
}

AdaptResult adapt(const SensorFilterState& state, const Vector& phi, double y) {
  if (phi.size() != state.theta_hat.size()) {
    throw DimensionError("adapt: regressor dimension mismatch");
  }
  const Vector p_phi = state.P * phi;
  const double denom = state.r + phi.dot(p_phi);
  AdaptResult out;
  out.gain = p_phi / denom;
  out.theta_bar = state.theta_hat + out.gain * (y - phi.dot(state.theta_hat));
  out.P_bar = linalg::symmetrize(state.P - out.gain * p_phi.transpose() + state.Q);
  return out;
}

SensorFilterState noncoop_step(const SensorFilterState& state, const Vector& phi,
                               double y) {
  AdaptResult a = adapt(state, phi, y);
  SensorFilterState next = state;
  next.theta_hat = std::move(a.theta_bar);
  next.P = std::move(a.P_bar);
  return next;
}

}  // namespace dkf::kalman
