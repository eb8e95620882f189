#pragma once

// Data generation for the time-varying stochastic regression model
//
//   y_{k,i}     = phi_{k,i}^T theta_k + v_{k,i}
//   theta_k     = theta_{k-1} + delta_k
//   x_{k,i}     = A_i x_{k-1,i} + B_i xi_{k,i},   phi_{k,i} = C_i x_{k,i}
//
// Time convention: record k carries theta_k and phi_{k,i} = C_i x_{k,i}; the
// first record (k = 0) uses the initial states unchanged.

#include "dkf/linalg.hpp"
#include "dkf/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dkf::signal {

/// Square root S of a symmetric PSD matrix (S S^T = cov). Throws
/// ValidationError for asymmetric or indefinite input.
Matrix psd_sqrt(const Matrix& cov);

class ParameterProcess {
 public:
  ParameterProcess(Vector theta0, const Matrix& delta_cov, RandomStream stream);

  int dim() const { return static_cast<int>(theta_.size()); }
  const Vector& theta() const { return theta_; }

  /// Draws delta_k and advances theta; returns (theta_k, delta_k).
  std::pair<Vector, Vector> step();

 private:
  Vector theta_;
  Matrix delta_sqrt_;
  RandomStream stream_;
};

struct GeneratorMatrices {
  Matrix A;                // m x m
  Matrix B;                // m x p
  Matrix C;                // m x m
  Matrix innovation_cov;   // p x p
};

/// Throws ConfigError-compatible DimensionError naming the offending matrix.
void check_dimensions(const GeneratorMatrices& g, int m);

class RegressorGenerator {
 public:
  RegressorGenerator(GeneratorMatrices matrices, Vector x0, RandomStream stream);

  int dim() const { return static_cast<int>(x_.size()); }
  const Vector& state() const { return x_; }
  const GeneratorMatrices& matrices() const { return m_; }
  /// phi for the current state, C x.
  Vector output() const { return m_.C * x_; }

  /// Advances x_k = A x_{k-1} + B xi_k and returns phi_k = C x_k.
  Vector step();

  /// Same generator state, fresh innovations from `stream`.
  RegressorGenerator with_stream(RandomStream stream) const;

 private:
  GeneratorMatrices m_;
  Matrix innovation_sqrt_;
  Vector x_;
  RandomStream stream_;
};

enum class NoiseKind { kGaussian, kZero };

struct NoiseSpec {
  double variance = 0.0;
  NoiseKind kind = NoiseKind::kGaussian;
};

struct Observation {
  double y = 0.0;
  double v = 0.0;
};

/// y = phi^T theta + v with v drawn per `noise`.
Observation observe(const Vector& theta, const Vector& phi, const NoiseSpec& noise,
                    RandomStream& stream);

struct SensorObservation {
  long k = 0;
  double y = 0.0;
  Vector phi;
  double v = 0.0;
};

struct ObservationRecord {
  long k = 0;
  Vector theta;   // theta_k
  Vector delta;   // delta_k = theta_k - theta_{k-1} (zero at k = 0)
  std::vector<SensorObservation> sensors;

  std::size_t size() const { return sensors.size(); }
};

struct StackedObservation {
  Vector Y;       // n
  Matrix Phi;     // mn x n, phi_i in block (i, i)
  Vector V;       // n
  Vector Theta;   // mn, n copies of theta_k
  Vector Delta;   // mn, n copies of delta_k
};

/// Throws ValidationError when sensor records disagree on k.
StackedObservation stack(const ObservationRecord& record);

/// Network-level signal source: one parameter process, n regressor
/// generators and n noise streams, all drawn from one (seed, run) pair.
struct SignalSpec {
  Vector theta0;
  Matrix delta_cov;
  std::vector<GeneratorMatrices> generators;
  std::vector<Vector> x0;
  std::vector<NoiseSpec> noise;
};

class SignalSource {
 public:
  SignalSource(const SignalSpec& spec, std::uint64_t seed, std::uint64_t run);

  std::size_t sensors() const { return generators_.size(); }
  const std::vector<RegressorGenerator>& generators() const { return generators_; }

  /// Returns record k (starting at 0) and advances to k + 1.
  ObservationRecord next();

 private:
  ParameterProcess parameter_;
  std::vector<RegressorGenerator> generators_;
  std::vector<NoiseSpec> noise_;
  std::vector<RandomStream> noise_streams_;
  long k_ = 0;
};

}  // namespace dkf::signal
