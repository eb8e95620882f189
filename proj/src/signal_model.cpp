#include "dkf/signal_model.hpp"

#include "dkf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace dkf::signal {
namespace {

Vector draw_normal(RandomStream& stream, Eigen::Index dim) {
  Vector z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = stream.normal();
  return z;
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix psd_sqrt(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("covariance must be square");
  if (cov.size() == 0) return cov;
  if (!linalg::is_symmetric(cov, 1e-12)) {
    throw ValidationError("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(cov));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ValidationError("covariance must be positive semidefinite");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

ParameterProcess::ParameterProcess(Vector theta0, const Matrix& delta_cov,
                                   RandomStream stream)
    : theta_(std::move(theta0)), delta_sqrt_(psd_sqrt(delta_cov)),
      stream_(std::move(stream)) {
  if (delta_cov.rows() != theta_.size()) {
    throw DimensionError("delta covariance " + shape(delta_cov) +
                         " does not match parameter dimension " +
                         std::to_string(theta_.size()));
  }
}

std::pair<Vector, Vector> ParameterProcess::step() {
  const Vector delta = delta_sqrt_ * draw_normal(stream_, delta_sqrt_.cols());
  theta_ += delta;
  return {theta_, delta};
}

void check_dimensions(const GeneratorMatrices& g, int m) {
  if (g.A.rows() != m || g.A.cols() != m) {
    throw DimensionError("A must be " + std::to_string(m) + "x" + std::to_string(m) +
                         ", got " + shape(g.A));
  }
  if (g.B.rows() != m || g.B.cols() < 1) {
    throw DimensionError("B must have " + std::to_string(m) + " rows, got " + shape(g.B));
  }
  if (g.C.rows() != m || g.C.cols() != m) {
    throw DimensionError("C must be " + std::to_string(m) + "x" + std::to_string(m) +
                         ", got " + shape(g.C));
  }
  if (g.innovation_cov.rows() != g.B.cols() || g.innovation_cov.cols() != g.B.cols()) {
    throw DimensionError("innovation covariance must be " + std::to_string(g.B.cols()) +
                         "x" + std::to_string(g.B.cols()) + ", got " +
                         shape(g.innovation_cov));
  }
}

RegressorGenerator::RegressorGenerator(GeneratorMatrices matrices, Vector x0,
                                       RandomStream stream)
    : m_(std::move(matrices)), x_(std::move(x0)), stream_(std::move(stream)) {
  check_dimensions(m_, static_cast<int>(x_.size()));
  innovation_sqrt_ = psd_sqrt(m_.innovation_cov);
}

Vector RegressorGenerator::step() {
  const Vector xi = innovation_sqrt_ * draw_normal(stream_, innovation_sqrt_.cols());
  x_ = m_.A * x_ + m_.B * xi;
  return output();
}

RegressorGenerator RegressorGenerator::with_stream(RandomStream stream) const {
  RegressorGenerator copy = *this;
  copy.stream_ = std::move(stream);
  return copy;
}

Observation observe(const Vector& theta, const Vector& phi, const NoiseSpec& noise,
                    RandomStream& stream) {
  if (theta.size() != phi.size()) {
    throw DimensionError("observe: theta and phi dimensions differ");
  }
  Observation obs;
  if (noise.kind == NoiseKind::kGaussian && noise.variance > 0.0) {
    obs.v = std::sqrt(noise.variance) * stream.normal();
  }
  obs.y = phi.dot(theta) + obs.v;
  return obs;
}

StackedObservation stack(const ObservationRecord& record) {
  const auto n = static_cast<Eigen::Index>(record.size());
  const Eigen::Index m = record.theta.size();
  StackedObservation out;
  out.Y.resize(n);
  out.V.resize(n);
  std::vector<Vector> phis;
  phis.reserve(record.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = record.sensors[static_cast<std::size_t>(i)];
    if (s.k != record.k) {
      throw ValidationError("stack: sensor " + std::to_string(i) + " is at k=" +
                            std::to_string(s.k) + ", record is at k=" +
                            std::to_string(record.k));
    }
    out.Y(i) = s.y;
    out.V(i) = s.v;
    phis.push_back(s.phi);
  }
  out.Phi = linalg::block_diagonal_columns(phis);
  out.Theta = record.theta.replicate(n, 1);
  const Vector delta = record.delta.size() == m ? record.delta : Vector::Zero(m);
  out.Delta = delta.replicate(n, 1);
  return out;
}

SignalSource::SignalSource(const SignalSpec& spec, std::uint64_t seed, std::uint64_t run)
    : parameter_(spec.theta0, spec.delta_cov,
                 RandomStream(seed, {run, 0, StreamRole::kParameter, 0})),
      noise_(spec.noise) {
  const std::size_t n = spec.generators.size();
  if (spec.x0.size() != n || spec.noise.size() != n) {
    throw DimensionError("signal spec: per-sensor lists have different lengths");
  }
  generators_.reserve(n);
  noise_streams_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto sensor = static_cast<std::uint32_t>(i);
    generators_.emplace_back(spec.generators[i], spec.x0[i],
                             RandomStream(seed, {run, sensor, StreamRole::kRegressor, 0}));
    noise_streams_.emplace_back(seed, StreamId{run, sensor, StreamRole::kObservationNoise, 0});
  }
}

ObservationRecord SignalSource::next() {
  ObservationRecord rec;
  rec.k = k_;
  if (k_ == 0) {
    rec.theta = parameter_.theta();
    rec.delta = Vector::Zero(parameter_.dim());
  } else {
    std::tie(rec.theta, rec.delta) = parameter_.step();
  }
  rec.sensors.reserve(generators_.size());
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    SensorObservation s;
    s.k = k_;
    s.phi = k_ == 0 ? generators_[i].output() : generators_[i].step();
    const Observation obs = observe(rec.theta, s.phi, noise_[i], noise_streams_[i]);
    s.y = obs.y;
    s.v = obs.v;
    rec.sensors.push_back(std::move(s));
  }
  ++k_;
  return rec;
}

}  // namespace dkf::signal
