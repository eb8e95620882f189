#pragma once

// Per-sensor Kalman arithmetic for the random-walk parameter model.
//
// One kernel serves both the stand-alone filter and the adapt phase of the
// diffusion filter:
//
//   L     = P phi / (r + phi^T P phi)
//   theta = theta_hat + L (y - phi^T theta_hat)
//   P_bar = P - L phi^T P + Q

#include "dkf/linalg.hpp"

namespace dkf::kalman {

struct SensorFilterState {
  Vector theta_hat;
  Matrix P;
  double r = 1.0;   // prior observation-noise variance
  Matrix Q;         // prior parameter-variation covariance

  int dim() const { return static_cast<int>(theta_hat.size()); }
};

/// Throws ValidationError unless P is symmetric positive definite, r > 0 and
/// Q is positive definite with matching dimensions.
void check_state(const SensorFilterState& state);

struct AdaptResult {
  Vector theta_bar;
  Matrix P_bar;
  Vector gain;
};

Vector gain(const SensorFilterState& state, const Vector& phi);

/// ||P||^{1/2} / (2 sqrt(r)), the a priori bound on ||gain||.
double gain_bound(const SensorFilterState& state);

AdaptResult adapt(const SensorFilterState& state, const Vector& phi, double y);

/// Stand-alone (non-cooperative) filter step: adapt, then keep the result.
SensorFilterState noncoop_step(const SensorFilterState& state, const Vector& phi,
                               double y);

}  // namespace dkf::kalman
