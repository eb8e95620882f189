#include "dkf/property_suite.hpp"

#include "dkf/errors.hpp"
#include "dkf/excitation_diagnostics.hpp"

#include <Eigen/QR>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dkf::verify {
namespace {

enum SuiteId : std::uint64_t {
  kMixing = 1,
  kSandwich,
  kInversion,
  kGainBound,
  kAdaptBounds,
  kProductBound,
  kDegeneracy,
  kErrorRecursion,
  kStacked,
  kInverseBound,
};

RandomStream instance_stream(std::uint64_t seed, SuiteId suite, std::size_t j) {
  return RandomStream(seed, StreamId{j, 0, StreamRole::kTest, suite});
}

int uniform_int(RandomStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

double uniform(RandomStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Matrix random_normal_matrix(RandomStream& rng, int rows, int cols) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  }
  return g;
}

void record(SuiteResult& r, double value, bool ok) {
  ++r.instances;
  if (!ok) ++r.failures;
  r.worst = r.instances == 1 ? value : std::max(r.worst, value);
}

}  // namespace

Matrix random_spd(RandomStream& rng, int m, double lo, double hi) {
  const Eigen::HouseholderQR<Matrix> qr(random_normal_matrix(rng, m, m));
  const Matrix U = qr.householderQ();
  Vector eig(m);
  for (int i = 0; i < m; ++i) eig(i) = std::exp(uniform(rng, std::log(lo), std::log(hi)));
  return linalg::symmetrize(U * eig.asDiagonal() * U.transpose());
}

Vector random_normal_vector(RandomStream& rng, int m) {
  Vector v(m);
  for (int i = 0; i < m; ++i) v(i) = rng.normal();
  return v;
}

graph::AdjacencyMatrix random_balanced(RandomStream& rng, int n) {
  Matrix shift = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) shift(i, (i + 1) % n) = 1.0;
  const int extra = uniform_int(rng, 0, 2);
  std::vector<Matrix> terms{Matrix::Identity(n, n), shift};
  for (int t = 0; t < extra; ++t) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)],
                                              perm[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
    Matrix p = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    terms.push_back(p);
  }
  std::vector<double> w(terms.size());
  double total = 0.0;
  for (double& x : w) total += (x = uniform(rng, 0.1, 1.0));
  Matrix a = Matrix::Zero(n, n);
  for (std::size_t t = 0; t < terms.size(); ++t) a += (w[t] / total) * terms[t];
  return graph::AdjacencyMatrix(a);
}

diffusion::NetworkFilterState RandomNetwork::network() const {
  return diffusion::make_network(adjacency, priors);
}

RandomNetwork random_network(RandomStream& rng, int n, int m, bool identity_graph) {
  RandomNetwork net;
  net.adjacency = std::make_shared<const graph::AdjacencyMatrix>(
      identity_graph ? graph::AdjacencyMatrix::identity(static_cast<std::size_t>(n))
                     : random_balanced(rng, n));
  auto& sig = net.signal;
  sig.theta0 = random_normal_vector(rng, m);
  sig.delta_cov = random_spd(rng, m, 1e-3, 0.1);
  for (int i = 0; i < n; ++i) {
    signal::GeneratorMatrices g;
    g.A = random_normal_matrix(rng, m, m);
    g.A *= uniform(rng, 0.2, 0.9) / std::max(linalg::spectral_norm(g.A), 1e-12);
    g.B = random_normal_matrix(rng, m, 1);
    g.C = random_normal_matrix(rng, m, m);
    if (m > 1 && rng.uniform() < 0.3) {
      // Rank-one output: this sensor alone is not exciting.
      const int keep = uniform_int(rng, 0, m - 1);
      for (int row = 0; row < m; ++row) {
        if (row != keep) g.C.row(row).setZero();
      }
    }
    g.innovation_cov = Matrix::Constant(1, 1, uniform(rng, 0.1, 1.0));
    sig.generators.push_back(std::move(g));
    sig.x0.push_back(random_normal_vector(rng, m));
    sig.noise.push_back({uniform(rng, 0.01, 0.5), signal::NoiseKind::kGaussian});
  }
  const Matrix Q = random_spd(rng, m, 0.02, 0.5);
  for (int i = 0; i < n; ++i) {
    net.priors.push_back(
        {random_normal_vector(rng, m), random_spd(rng, m, 0.1, 5.0), uniform(rng, 0.05, 1.0), Q});
  }
  return net;
}

diffusion::Trajectory random_trajectory(const RandomNetwork& net, std::uint64_t seed,
                                        std::size_t steps) {
  signal::SignalSource source(net.signal, seed, 0);
  return diffusion::record_trajectory(source, net.network(), steps);
}

std::string summary_line(const SuiteResult& r) {
  return fmt::format("{:<16} {:>6} instances  {:>4} failures  worst {} = {:.3e} (tolerance {:.1e})  {}",
                     r.name, r.instances, r.failures, r.metric, r.worst, r.tolerance,
                     r.passed() ? "ok" : "FAILED");
}

SuiteResult mixing_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r{"mixing", 0, 0, 0.0, 1e-9, "-lambda_min/scale"};
  for (std::size_t j = 0; j < instances; ++j) {
    RandomStream rng = instance_stream(seed, kMixing, j);
    const int n = uniform_int(rng, 1, 5), m = uniform_int(rng, 1, 4);
    const auto adj = random_balanced(rng, n);
    std::vector<Matrix> Q;
    for (int i = 0; i < n; ++i) Q.push_back(random_spd(rng, m, 1e-2, 10.0));
    const auto check = diagnostics::check_mixing(adj, Q);
    record(r, -check.min_eigenvalue / check.scale, check.holds(r.tolerance));
  }
  return r;
}

SuiteResult sandwich_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r{"sandwich", 0, 0, 0.0, 1e-9, "-lambda_min/scale"};
  constexpr std::size_t kSteps = 20;
  for (std::size_t j = 0; r.instances < instances; ++j) {
    RandomStream rng = instance_stream(seed, kSandwich, j);
    const auto net = random_network(rng, uniform_int(rng, 1, 5), uniform_int(rng, 1, 4));
    const auto traj = random_trajectory(net, seed + j, kSteps);
    for (std::size_t k = 0; k < kSteps && r.instances < instances; ++k) {
      const auto c = diagnostics::check_sandwich(traj, k);
      const double worst = std::max(-c.information.min_eigenvalue / c.information.scale,
                                    -c.covariance.min_eigenvalue / c.covariance.scale);
      record(r, worst, c.information.holds(r.tolerance) && c.covariance.holds(r.tolerance));
    }
  }
  return r;
}

SuiteResult inversion_lemma_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r{"inversion", 0, 0, 0.0, 1e-8, "relative error"};
  for (std::size_t j = 0; j < instances; ++j) {
    RandomStream rng = instance_stream(seed, kInversion, j);
    const int m = uniform_int(rng, 1, 4);
    const kalman::SensorFilterState s{random_normal_vector(rng, m), random_spd(rng, m, 0.05, 5.0),
                                      uniform(rng, 0.05, 2.0), random_spd(rng, m, 0.02, 0.5)};
    const Vector phi = random_normal_vector(rng, m);
    const auto a = kalman::adapt(s, phi, rng.normal());
    const Matrix lhs = linalg::spd_inverse(linalg::symmetrize(a.P_bar - s.Q));
    const Matrix rhs = linalg::spd_inverse(s.P) + phi * phi.transpose() / s.r;
    const double err = (lhs - rhs).norm() / rhs.norm();
    record(r, err, err < r.tolerance);
  }
  return r;
}

SuiteResult gain_bound_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r{"gain_bound", 0, 0, 0.0, 1e-12, "|L|/bound - 1"};
  for (std::size_t j = 0; j < instances; ++j) {
    RandomStream rng = instance_stream(seed, kGainBound, j);
    const int m = uniform_int(rng, 1, 4);
    const kalman::SensorFilterState s{Vector::Zero(m), random_spd(rng, m, 1e-2, 1e2),
                                      uniform(rng, 0.01, 5.0), Matrix::Identity(m, m)};
    const Vector phi = random_normal_vector(rng, m) * std::exp(uniform(rng, -3.0, 3.0));
    const double excess = kalman::gain(s, phi).norm() / kalman::gain_bound(s) - 1.0;
    record(r, excess, excess <= r.tolerance);
  }
  return r;
}

SuiteResult adapt_bounds_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r{"adapt_bounds", 0, 0, 0.0, 1e-8, "normalised violation"};
  for (std::size_t j = 0; j < instances; ++j) {
    RandomStream rng = instance_stream(seed, kAdaptBounds, j);
    const int m = uniform_int(rng, 1, 4);
    const kalman::SensorFilterState s{random_normal_vector(rng, m), random_spd(rng, m, 0.05, 5.0),
                                      uniform(rng, 0.05, 2.0), random_spd(rng, m, 0.02, 0.5)};
    const Vector phi = random_normal_vector(rng, m);
    const auto a = kalman::adapt(s, phi, rng.normal());
    const Matrix I_minus = Matrix::Identity(m, m) - a.gain * phi.transpose();
    const Matrix joseph = I_minus * s.P * I_minus.transpose() +
                          s.r * a.gain * a.gain.transpose() + s.Q;
    const double joseph_err = (joseph - a.P_bar).norm() / a.P_bar.norm();
    const double floor_violation =
        std::max(0.0, -linalg::min_eigenvalue(a.P_bar - s.Q)) / linalg::spectral_norm(s.Q);
    const double ceiling_violation =
        std::max(0.0, linalg::max_eigenvalue(a.P_bar - s.P - s.Q)) / linalg::spectral_norm(s.P);
    const double worst = std::max({joseph_err, floor_violation, ceiling_violation});
    record(r, worst, joseph_err < 1e-8 && floor_violation <= 1e-10 && ceiling_violation <= 1e-10);
  }
  return r;
}

SuiteResult product_bound_suite(std::size_t trajectories, std::size_t length,
                                std::uint64_t seed) {
  SuiteResult r{"product_bound", 0, 0, 0.0, 1e-8, "max(ratio - 1, lyapunov excess)"};
  for (std::size_t j = 0; j < trajectories; ++j) {
    RandomStream rng = instance_stream(seed, kProductBound, j);
    const int n = uniform_int(rng, 1, 4), m = uniform_int(rng, 1, 4);
    const auto net = random_network(rng, n, m);
    const auto traj = random_trajectory(net, seed + j, length);
    Vector x = random_normal_vector(rng, n * m);
    x.normalize();
    const auto sweep = diagnostics::sweep_windows(traj, 0, x);
    const double worst =
        std::max(sweep.worst_product_ratio - 1.0, sweep.lyapunov.worst_relative_excess);
    record(r, worst, sweep.holds(r.tolerance));
  }
  return r;
}

SuiteResult degeneracy_suite(std::size_t configs, std::size_t steps, std::uint64_t seed) {
  SuiteResult r{"degeneracy", 0, 0, 0.0, 1e-12, "max abs difference"};
  for (std::size_t j = 0; j < configs; ++j) {
    RandomStream rng = instance_stream(seed, kDegeneracy, j);
    const auto net = random_network(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), true);
    signal::SignalSource source(net.signal, seed + j, 0);
    auto dkf = net.network();
    auto nc = dkf;
    double worst = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const auto obs = source.next();
      dkf = diffusion::dkf_step(dkf, obs);
      nc = diffusion::noncoop_network_step(nc, obs);
      for (std::size_t i = 0; i < dkf.size(); ++i) {
        worst = std::max({worst,
                          (dkf.sensors[i].theta_hat - nc.sensors[i].theta_hat).cwiseAbs().maxCoeff(),
                          (dkf.sensors[i].P - nc.sensors[i].P).cwiseAbs().maxCoeff()});
      }
    }
    record(r, worst, worst < r.tolerance);
  }
  return r;
}

SuiteResult error_recursion_suite(std::size_t configs, std::size_t steps, std::uint64_t seed) {
  SuiteResult r{"error_recursion", 0, 0, 0.0, 1e-8, "discrepancy/(1+|theta|)"};
  for (std::size_t j = 0; j < configs; ++j) {
    RandomStream rng = instance_stream(seed, kErrorRecursion, j);
    const auto net = random_network(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 4));
    const auto report = diffusion::error_recursion_check(random_trajectory(net, seed + j, steps));
    record(r, report.worst(), report.worst() < r.tolerance);
  }
  return r;
}

SuiteResult stacked_form_suite(std::size_t configs, std::size_t steps, std::uint64_t seed) {
  SuiteResult r{"stacked_form", 0, 0, 0.0, 1e-10, "relative difference"};
  for (std::size_t j = 0; j < configs; ++j) {
    RandomStream rng = instance_stream(seed, kStacked, j);
    const auto net = random_network(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 4));
    signal::SignalSource source(net.signal, seed + j, 0);
    auto state = net.network();
    double worst = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const auto obs = source.next();
      const auto a = diffusion::dkf_step(state, obs);
      const auto b = diffusion::stacked_step(state, obs);
      const Vector ea = diffusion::stacked_estimate(a), eb = diffusion::stacked_estimate(b);
      const Matrix pa = diffusion::stacked_covariance(a), pb = diffusion::stacked_covariance(b);
      worst = std::max({worst,
                        ((ea - eb).array().abs() / (1.0 + ea.array().abs())).maxCoeff(),
                        ((pa - pb).array().abs() / (1.0 + pa.array().abs())).maxCoeff()});
      state = a;
    }
    record(r, worst, worst < r.tolerance);
  }
  return r;
}

SuiteResult inverse_bound_suite(std::size_t configs, std::size_t steps, std::uint64_t seed) {
  SuiteResult r{"inverse_bound", 0, 0, 0.0, 1e-10, "|P^-1|/|Q^-1| - 1"};
  for (std::size_t j = 0; j < configs; ++j) {
    RandomStream rng = instance_stream(seed, kInverseBound, j);
    const auto net = random_network(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 4));
    const auto traj = random_trajectory(net, seed + j, steps);
    // The bound covers k >= 1; the prior P_0 is arbitrary.
    double worst = 0.0;
    for (std::size_t k = 1; k <= traj.length(); ++k) {
      for (const auto& s : traj.state_at(k).sensors) {
        worst = std::max(worst, linalg::min_eigenvalue(s.Q) / linalg::min_eigenvalue(s.P));
      }
    }
    record(r, worst - 1.0, worst - 1.0 <= r.tolerance);
  }
  return r;
}

std::vector<SuiteResult> run_all(std::size_t instances, std::uint64_t seed) {
  const std::size_t traj = std::clamp<std::size_t>(instances / 100, 1, 100);
  return {
      mixing_suite(instances, seed),
      sandwich_suite(instances, seed),
      inversion_lemma_suite(instances, seed),
      gain_bound_suite(instances, seed),
      adapt_bounds_suite(instances, seed),
      product_bound_suite(traj, 200, seed),
      degeneracy_suite(std::min<std::size_t>(traj, 10), 1000, seed),
      error_recursion_suite(traj, 100, seed),
      stacked_form_suite(std::min<std::size_t>(traj, 20), 50, seed),
      inverse_bound_suite(traj, 200, seed),
  };
}

}  // namespace dkf::verify
