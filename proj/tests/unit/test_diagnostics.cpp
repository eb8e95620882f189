#include "dkf/errors.hpp"
#include "dkf/excitation_diagnostics.hpp"
#include "dkf/property_suite.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dkf {
namespace {

using diagnostics::MonteCarloSpec;

signal::RegressorGenerator scalar_generator(double a, double b, double x0, std::uint64_t seed = 1) {
  signal::GeneratorMatrices g{Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                              Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  return signal::RegressorGenerator(g, Vector::Constant(1, x0), RandomStream(seed, {}));
}

TEST(NormalizedGram, HandComputed) {
  const std::vector<Vector> one{Vector::Unit(2, 0)};
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  EXPECT_EQ(diagnostics::normalized_gram(one), expected);
  const std::vector<Vector> two{Vector::Unit(2, 0), Vector::Ones(2)};
  expected = Matrix::Constant(2, 2, 1.0 / 3);
  expected(0, 0) += 0.5;
  expected /= 2;
  EXPECT_LT((diagnostics::normalized_gram(two) - expected).norm(), 1e-15);
  EXPECT_THROW(diagnostics::normalized_gram(std::vector<Vector>{}), ValidationError);
}

// phi = 1 at every step: h terms of 1/2, normalised by h + 1.
TEST(Lambda, DeterministicRegressor) {
  const auto gen = scalar_generator(1.0, 0.0, 1.0);
  for (int h : {1, 5}) {
    const auto est = diagnostics::estimate_lambda_single(gen, {h, 50, 3, 0});
    EXPECT_DOUBLE_EQ(est.value, h / (2.0 * (h + 1)));
    EXPECT_LT(est.std_error, 1e-15);
    EXPECT_EQ(est.mc_samples, 50);
  }
}

TEST(Lambda, NoInputNoExcitation) {
  const auto est = diagnostics::estimate_lambda_single(scalar_generator(0.5, 0.0, 0.0), {5, 20, 1, 0});
  EXPECT_EQ(est.value, 0.0);
}

TEST(Lambda, NetworkOfOneEqualsSingle) {
  const std::vector<signal::RegressorGenerator> gens{scalar_generator(0.5, 1.0, 0.3)};
  const MonteCarloSpec spec{4, 200, 9, 2};
  const auto single = diagnostics::estimate_lambda_single(gens[0], spec, 0);
  const auto network = diagnostics::estimate_lambda_network(gens, spec);
  EXPECT_EQ(single.value, network.value);
  EXPECT_EQ(single.std_error, network.std_error);
}

TEST(Lambda, StandardErrorShrinksWithSamples) {
  const auto gen = scalar_generator(0.5, 1.0, 0.0);
  const auto small = diagnostics::estimate_lambda_single(gen, {5, 1000, 4, 0});
  const auto large = diagnostics::estimate_lambda_single(gen, {5, 4000, 4, 0});
  EXPECT_GT(small.value, 0.0);
  EXPECT_NEAR(large.std_error / small.std_error, 0.5, 0.1);
  EXPECT_NEAR(small.value, large.value, 4 * small.std_error);
}

TEST(Lambda, RejectsBadSpec) {
  const auto gen = scalar_generator(0.5, 1.0, 0.0);
  EXPECT_THROW(diagnostics::estimate_lambda_single(gen, {0, 10, 1, 0}), ValidationError);
  EXPECT_THROW(diagnostics::estimate_lambda_single(gen, {5, 0, 1, 0}), ValidationError);
}

TEST(DecayFit, ConstantSequence) {
  const std::vector<std::vector<double>> reps(3, std::vector<double>(30, 0.2));
  const auto fit = diagnostics::s0_decay_fit(reps);
  EXPECT_NEAR(fit.lambda_hat, 0.8, 1e-12);
  EXPECT_NEAR(fit.M_hat, 1.0, 1e-12);
  EXPECT_FALSE(fit.no_empirical_decay);
}

TEST(DecayFit, ZeroSequenceHasNoDecay) {
  const std::vector<std::vector<double>> reps(2, std::vector<double>(20, 0.0));
  const auto fit = diagnostics::s0_decay_fit(reps);
  EXPECT_NEAR(fit.lambda_hat, 1.0, 1e-12);
  EXPECT_TRUE(fit.no_empirical_decay);
}

// E prod (1 - a_j) = 2^-g for independent uniform a_j.
TEST(DecayFit, UniformSamples) {
  RandomStream rng(17, {});
  std::vector<std::vector<double>> reps(10000, std::vector<double>(6));
  for (auto& r : reps) {
    for (double& a : r) a = rng.uniform();
  }
  const auto fit = diagnostics::s0_decay_fit(reps, 5);
  EXPECT_NEAR(fit.lambda_hat, 0.5, 0.02);
}

TEST(DecayFit, RejectsInvalidSamples) {
  EXPECT_THROW(diagnostics::s0_decay_fit({{0.5, 1.5}}), ValidationError);
  EXPECT_THROW(diagnostics::s0_decay_fit({{0.5}}), ValidationError);
  EXPECT_THROW(diagnostics::s0_decay_fit({}), ValidationError);
}

TEST(Mixing, TwoNodeHandComputed) {
  const graph::AdjacencyMatrix adj(Matrix::Constant(2, 2, 0.5));
  const std::vector<Matrix> Q{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 3.0)};
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  EXPECT_LT((diagnostics::mixing_difference(adj, Q) - expected).norm(), 1e-15);
  EXPECT_TRUE(diagnostics::check_mixing(adj, Q).holds());
}

TEST(Mixing, IdentityGraphIsExactlyZero) {
  RandomStream rng(3, {});
  const std::vector<Matrix> Q{verify::random_spd(rng, 3, 0.1, 10), verify::random_spd(rng, 3, 0.1, 10)};
  EXPECT_EQ(diagnostics::mixing_difference(graph::AdjacencyMatrix::identity(2), Q),
            Matrix::Zero(6, 6));
}

TEST(Mixing, RejectsIndefiniteBlocks) {
  const std::vector<Matrix> Q{Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0)};
  EXPECT_THROW(diagnostics::check_mixing(graph::AdjacencyMatrix::identity(2), Q), ValidationError);
}

TEST(Sandwich, IdentityGraphIsTight) {
  RandomStream rng(8, {});
  const auto net = verify::random_network(rng, 3, 2, true);
  const auto traj = verify::random_trajectory(net, 4, 30);
  for (std::size_t k = 0; k < traj.length(); ++k) {
    const auto c = diagnostics::check_sandwich(traj, k);
    EXPECT_LE(std::abs(c.information.min_eigenvalue), 1e-12 * c.information.scale);
    EXPECT_LE(std::abs(c.covariance.min_eigenvalue), 1e-12 * c.covariance.scale);
  }
}

TEST(Sandwich, HoldsOnMixingNetwork) {
  RandomStream rng(9, {});
  const auto net = verify::random_network(rng, 4, 3);
  const auto traj = verify::random_trajectory(net, 5, 40);
  for (std::size_t k = 0; k < traj.length(); ++k) {
    const auto c = diagnostics::check_sandwich(traj, k);
    EXPECT_TRUE(c.information.holds());
    EXPECT_TRUE(c.covariance.holds());
  }
}

TEST(StabilityChecks, RandomTrajectory) {
  RandomStream rng(10, {});
  const auto net = verify::random_network(rng, 3, 2);
  const auto traj = verify::random_trajectory(net, 6, 80);
  EXPECT_TRUE(diagnostics::check_product_bound(traj, 3, 40).holds());
  Vector x = Vector::Ones(6).normalized();
  const auto sweep = diagnostics::sweep_windows(traj, 0, x);
  EXPECT_EQ(sweep.windows, 80u);
  EXPECT_TRUE(sweep.holds());
  EXPECT_LE(diagnostics::max_inverse_norm_ratio(traj), 1.0 + 1e-10);
  const auto a = diagnostics::contraction_sequence(traj);
  ASSERT_EQ(a.size(), 80u);
  for (double v : a) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_GT(diagnostics::sup_trace(traj), 0.0);
}

TEST(TraceRecursion, RejectsShortTrajectory) {
  RandomStream rng(11, {});
  const auto net = verify::random_network(rng, 2, 2);
  const auto traj = verify::random_trajectory(net, 1, 10);
  EXPECT_THROW(diagnostics::trace_recursion_report(traj, 5, 1, 0.5), ValidationError);
  EXPECT_THROW(diagnostics::trace_recursion_report(traj, 1, 0, 0.5), ValidationError);
  const auto rep = diagnostics::trace_recursion_report(traj, 2, 1, 0.5);
  EXPECT_EQ(rep.h_prime, 3);
  EXPECT_EQ(rep.blocks.size(), 2u);
}

}  // namespace
}  // namespace dkf
