#pragma once

// Randomised instances and the property suites run by `verify` and the
// acceptance checks. Instance j of a suite draws from its own stream
// (seed, run = j, role = kTest, extra = suite id), so suites are reproducible
// and independent of each other.

#include "dkf/diffusion_combiner.hpp"
#include "dkf/random.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dkf::verify {

// --- random instances ------------------------------------------------------

/// SPD matrix with log-uniform eigenvalues in [lo, hi] and a random basis.
Matrix random_spd(RandomStream& rng, int m, double lo, double hi);

Vector random_normal_vector(RandomStream& rng, int m);

/// Doubly stochastic matrix: random convex mix of the identity, the cyclic
/// shift (which makes the support strongly connected) and random permutations.
graph::AdjacencyMatrix random_balanced(RandomStream& rng, int n);

struct RandomNetwork {
  std::shared_ptr<const graph::AdjacencyMatrix> adjacency;
  signal::SignalSpec signal;
  std::vector<kalman::SensorFilterState> priors;

  diffusion::NetworkFilterState network() const;
};

/// Stable random regressor generators, random priors; A = I when `identity_graph`.
RandomNetwork random_network(RandomStream& rng, int n, int m, bool identity_graph = false);

/// A DKF trajectory of `steps` steps driven by the network's own signal.
diffusion::Trajectory random_trajectory(const RandomNetwork& net, std::uint64_t seed,
                                        std::size_t steps);

// --- suites ----------------------------------------------------------------

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  /// Worst value of the suite's figure of merit (see `metric`).
  double worst = 0.0;
  double tolerance = 0.0;
  std::string metric;

  bool passed() const { return instances > 0 && failures == 0; }
};

std::string summary_line(const SuiteResult& r);

/// lambda_min(Q' - A_m^T Q A_m) / scale over random balanced graphs.
SuiteResult mixing_suite(std::size_t instances, std::uint64_t seed);

/// Both sandwich inequalities at `instances` steps of random DKF trajectories.
SuiteResult sandwich_suite(std::size_t instances, std::uint64_t seed);

/// (P_bar - Q)^{-1} = P^{-1} + phi phi^T / r for adapt outputs.
SuiteResult inversion_lemma_suite(std::size_t instances, std::uint64_t seed);

/// |L| <= |P|^{1/2} / (2 sqrt r).
SuiteResult gain_bound_suite(std::size_t instances, std::uint64_t seed);

/// P_bar = (I - L phi^T) P (I - L phi^T)^T + r L L^T + Q; P_bar >= Q; P_bar <= P + Q.
SuiteResult adapt_bounds_suite(std::size_t instances, std::uint64_t seed);

/// Product bound for every window from s = 0 and the Lyapunov recursion.
SuiteResult product_bound_suite(std::size_t trajectories, std::size_t length,
                                std::uint64_t seed);

/// A = I: distributed and non-cooperative trajectories agree to 1e-12.
SuiteResult degeneracy_suite(std::size_t configs, std::size_t steps, std::uint64_t seed);

/// Error recursions against direct subtraction, 1e-8 (1 + |theta|).
SuiteResult error_recursion_suite(std::size_t configs, std::size_t steps, std::uint64_t seed);

/// stacked_step against dkf_step, relative 1e-10 per coordinate.
SuiteResult stacked_form_suite(std::size_t configs, std::size_t steps, std::uint64_t seed);

/// |P_{k,i}^{-1}| <= |Q^{-1}| (1 + 1e-10) along random trajectories.
SuiteResult inverse_bound_suite(std::size_t configs, std::size_t steps, std::uint64_t seed);

/// All suites; matrix suites get `instances`, trajectory suites a fixed size.
std::vector<SuiteResult> run_all(std::size_t instances, std::uint64_t seed);

}  // namespace dkf::verify
