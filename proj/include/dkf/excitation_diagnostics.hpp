#pragma once

// Excitation estimates and numerically checkable stability inequalities for
// the diffusion filter.
//
// The conditional expectations in the excitation conditions are realised by
// freezing the regressor generators at time kh and simulating independent
// futures; the matrix inequalities are evaluated on explicit mn x mn stacked
// matrices.

#include "dkf/diffusion_combiner.hpp"
#include "dkf/graph_topology.hpp"
#include "dkf/signal_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dkf::diagnostics {

/// Mean of phi phi^T / (1 + |phi|^2) over the samples. Eigenvalues lie in [0, 1).
Matrix normalized_gram(std::span<const Vector> samples);

struct LambdaEstimate {
  double value = 0.0;       // lambda_min of the Monte Carlo mean, in [0, 1]
  int mc_samples = 0;
  double std_error = 0.0;   // delta-method standard error along the min eigenvector

  double lower_bound(double sigmas) const { return value - sigmas * std_error; }
};

/// Eigenvalues below this fraction of max(1, ||G||) are reported as zero.
inline constexpr double kRankFloor = 1e-12;

struct MonteCarloSpec {
  int h = 5;
  int mc = 1000;
  std::uint64_t seed = 0;
  /// Distinguishes estimates taken at different freeze times.
  std::uint64_t tag = 0;
};

/// Single-sensor excitation: lambda_min E[(1/(h+1)) sum_{j=1}^{h} phi phi^T/(1+|phi|^2) | frozen].
/// `sensor` only selects the random streams.
LambdaEstimate estimate_lambda_single(const signal::RegressorGenerator& frozen,
                                      const MonteCarloSpec& spec, std::uint32_t sensor = 0);

/// Network excitation with normalisation 1/(n(h+1)). For n == 1 this is
/// identical to estimate_lambda_single with sensor 0.
LambdaEstimate estimate_lambda_network(std::span<const signal::RegressorGenerator> frozen,
                                       const MonteCarloSpec& spec);

struct S0Diagnostic {
  double lambda_hat = 1.0;
  double M_hat = 1.0;
  bool no_empirical_decay = false;   // lambda_hat >= 1 - 1e-3
  std::vector<int> gaps;
  std::vector<double> mean_products;  // E[prod_{j=i+1}^{i+g} (1 - a_j)]
};

/// Fits log E[prod (1 - a_j)] ~ log M + g log lambda over gaps g = 1..max_gap.
/// `replications[r][j]` is a_j of replication r. Throws ValidationError on
/// samples outside [0, 1] or sequences shorter than 2.
S0Diagnostic s0_decay_fit(const std::vector<std::vector<double>>& replications,
                          int max_gap = 10);

struct TraceBlock {
  int s = 0;             // pair (T_s, T_{s+1})
  double T_s = 0.0;
  double T_next = 0.0;
  double b = 0.0;        // b_{s+1}
  double c1 = 0.0;
  double c2 = 0.0;
  double bound = 0.0;    // (1 - b) T_s + d
  bool violated = false;
};

struct TraceRecursionReport {
  int h = 0;
  int diameter = 0;
  int h_prime = 0;
  double a_min = 0.0;
  double d = 0.0;
  std::vector<TraceBlock> blocks;
  int violations = 0;
  /// Worst T_{s+1} / bound over all pairs.
  double worst_ratio = 0.0;
  /// Block s = 0 with T_0 = 0 (T_1 <= d); informational only.
  double first_block = 0.0;
};

/// Trace recursion over blocks of length h' = h + D. Requires D >= 1 and at
/// least 2h' recorded steps.
TraceRecursionReport trace_recursion_report(const diffusion::Trajectory& traj, int h,
                                            int diameter, double a_min);

struct InequalityCheck {
  double min_eigenvalue = 0.0;
  double scale = 1.0;

  bool holds(double relative_tol = 1e-9) const {
    return min_eigenvalue >= -relative_tol * scale;
  }
};

/// Q' - A_m^T Q A_m with Q = diag(Q_i), Q'_i = sum_j a_{ji} Q_j.
Matrix mixing_difference(const graph::AdjacencyMatrix& adj, std::span<const Matrix> Q);

/// lambda_min of mixing_difference. Throws ValidationError on non-SPD Q_i.
InequalityCheck check_mixing(const graph::AdjacencyMatrix& adj, std::span<const Matrix> Q);

struct SandwichCheck {
  InequalityCheck information;   // P_{k+1}^{-1} - A_m^T P_bar^{-1} A_m
  InequalityCheck covariance;    // P_bar - A_m P_{k+1} A_m^T
};

SandwichCheck check_sandwich(const graph::AdjacencyMatrix& adj,
                           std::span<const Matrix> P_bar, std::span<const Matrix> P_next);
SandwichCheck check_sandwich(const diffusion::Trajectory& traj, std::size_t step);

/// Stacked quantities of one recorded step.
struct StepOperators {
  Matrix transition;   // P_{k+1} A_m^T P_bar^{-1} (I - L Phi^T)
  Matrix P_k;
  Matrix P_next;
  Matrix P_bar;
  Matrix Q_k;          // R L L^T + Q_diag
  double contraction;  // 1 - 1/(1 + ||Q_k^{-1} P_bar||)
};

StepOperators step_operators(const diffusion::Trajectory& traj, std::size_t step);

struct ProductBoundCheck {
  double lhs = 0.0;    // ||prod transition||^2
  double rhs = 0.0;    // prod contraction * ||P_t|| * ||P_s^{-1}||
  bool holds(double relative_tol = 1e-8) const { return lhs <= rhs * (1.0 + relative_tol); }
};

/// Product bound over the window [s, t).
ProductBoundCheck check_product_bound(const diffusion::Trajectory& traj, std::size_t s,
                                      std::size_t t);

struct LyapunovCheck {
  /// max over steps of (V_{k+1} - contraction_k V_k) / V_k.
  double worst_relative_excess = 0.0;
  std::size_t steps = 0;
  bool holds(double relative_tol = 1e-8) const { return worst_relative_excess <= relative_tol; }
};

/// V_k = x_k^T P_k^{-1} x_k along x_{k+1} = transition_k x_k from x_s.
LyapunovCheck check_lyapunov(const diffusion::Trajectory& traj, std::size_t s, std::size_t t,
                             const Vector& x_s);

struct WindowSweep {
  /// max over t in (s, length] of lhs / rhs of the product bound on [s, t).
  double worst_product_ratio = 0.0;
  /// Lyapunov check along the same windows.
  LyapunovCheck lyapunov;
  std::size_t windows = 0;

  bool holds(double relative_tol = 1e-8) const {
    return worst_product_ratio <= 1.0 + relative_tol && lyapunov.holds(relative_tol);
  }
};

/// Product bound for every window [s, t] with s fixed, and the Lyapunov
/// recursion from x_s, sharing one pass over the step operators.
WindowSweep sweep_windows(const diffusion::Trajectory& traj, std::size_t s, const Vector& x_s);

/// max_{k,i} ||P_{k,i}^{-1}|| / ||Q^{-1}||.
double max_inverse_norm_ratio(const diffusion::Trajectory& traj);

/// max_k sum_i Tr(P_{k,i}).
double sup_trace(const diffusion::Trajectory& traj);

/// a_k = 1 / (1 + ||Q_diag^{-1}|| ||P_bar_k||) along the trajectory (k >= 1).
std::vector<double> contraction_sequence(const diffusion::Trajectory& traj);

}  // namespace dkf::diagnostics
