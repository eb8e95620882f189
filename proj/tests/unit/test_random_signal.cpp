#include "dkf/errors.hpp"
#include "dkf/random.hpp"
#include "dkf/signal_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dkf {
namespace {

using Words = std::array<std::uint32_t, 4>;

// Reference vectors of the Philox4x32-10 block function.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
            (Words{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Words{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Words{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, DeterministicAndIndependentOfOtherStreams) {
  RandomStream a(42, {3, 1, StreamRole::kRegressor, 0});
  RandomStream b(42, {3, 1, StreamRole::kRegressor, 0});
  RandomStream other(42, {3, 2, StreamRole::kRegressor, 0});
  for (int i = 0; i < 100; ++i) other.normal();
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RandomStream c(42, {3, 1, StreamRole::kRegressor, 0});
  RandomStream d(42, {3, 1, StreamRole::kObservationNoise, 0});
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += c.next_u64() == d.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(RandomStream, UniformRangeAndNormalMoments) {
  RandomStream s(1, {});
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = s.normal();
    sum += z;
    sumsq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sumsq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

signal::GeneratorMatrices sensor1() {
  signal::GeneratorMatrices g;
  g.A = Vector::Map(std::array<double, 3>{0.5, 1.0 / 3, 0.2}.data(), 3).asDiagonal();
  g.B = Vector::Unit(3, 0);
  g.C = Matrix::Zero(3, 3);
  g.C(0, 0) = 1;
  g.innovation_cov = Matrix::Constant(1, 1, 0.3);
  return g;
}

TEST(ParameterProcess, ZeroCovarianceKeepsTheta) {
  signal::ParameterProcess p(Vector::Ones(3), Matrix::Zero(3, 3), RandomStream(1, {}));
  for (int k = 0; k < 10; ++k) {
    const auto [theta, delta] = p.step();
    EXPECT_EQ(theta, Vector::Ones(3));
    EXPECT_EQ(delta, Vector::Zero(3));
  }
}

TEST(ParameterProcess, RandomWalkIdentityAndDeterminism) {
  const Matrix cov = 0.3 * Matrix::Identity(3, 3);
  signal::ParameterProcess a(Vector::Ones(3), cov, RandomStream(9, {}));
  signal::ParameterProcess b(Vector::Ones(3), cov, RandomStream(9, {}));
  Vector prev = Vector::Ones(3);
  double sumsq = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto [theta, delta] = a.step();
    EXPECT_EQ(theta, prev + delta);
    EXPECT_EQ(theta, b.step().first);
    prev = theta;
    sumsq += delta.squaredNorm();
  }
  EXPECT_NEAR(sumsq / (3 * n), 0.3, 0.3 * 4 * std::sqrt(2.0 / (3 * n)));
}

TEST(PsdSqrt, RejectsIndefinite) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  EXPECT_THROW(signal::psd_sqrt(m), ValidationError);
  const Matrix c = Vector::Map(std::array<double, 2>{4.0, 0.0}.data(), 2).asDiagonal();
  const Matrix s = signal::psd_sqrt(c);
  EXPECT_LT((s * s.transpose() - c).norm(), 1e-14);
}

TEST(RegressorGenerator, SensorOneOnlyFirstCoordinate) {
  signal::RegressorGenerator g(sensor1(), Vector::Ones(3), RandomStream(3, {}));
  for (int k = 0; k < 100; ++k) {
    const Vector phi = g.step();
    EXPECT_EQ(phi(1), 0.0);
    EXPECT_EQ(phi(2), 0.0);
    EXPECT_EQ(phi(0), g.state()(0));
  }
}

TEST(RegressorGenerator, ZeroInputZeroState) {
  auto m = sensor1();
  m.B.setZero();
  m.C = Matrix::Identity(3, 3);
  signal::RegressorGenerator g(m, Vector::Zero(3), RandomStream(3, {}));
  for (int k = 0; k < 10; ++k) EXPECT_EQ(g.step(), Vector::Zero(3));
}

TEST(RegressorGenerator, MemorylessInput) {
  auto m = sensor1();
  m.A.setZero();
  m.C = Matrix::Identity(3, 3);
  m.innovation_cov = Matrix::Identity(1, 1);
  signal::RegressorGenerator g(m, Vector::Ones(3), RandomStream(5, {0, 0, StreamRole::kRegressor, 0}));
  RandomStream ref(5, {0, 0, StreamRole::kRegressor, 0});
  for (int k = 0; k < 10; ++k) {
    const Vector phi = g.step();
    EXPECT_DOUBLE_EQ(phi(0), ref.normal());
    EXPECT_EQ(phi(1), 0.0);
    EXPECT_EQ(phi(2), 0.0);
  }
}

TEST(RegressorGenerator, DimensionMismatchNamesMatrix) {
  auto m = sensor1();
  m.C = Matrix::Identity(2, 2);
  try {
    signal::check_dimensions(m, 3);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("C"), std::string::npos);
  }
}

TEST(Observe, NoiselessInnerProduct) {
  RandomStream s(1, {});
  Vector theta(2), phi(2);
  theta << 1, 2;
  phi << 3, 4;
  const auto o = signal::observe(theta, phi, {0.0, signal::NoiseKind::kZero}, s);
  EXPECT_EQ(o.y, 11.0);
  EXPECT_EQ(o.v, 0.0);
  const auto z = signal::observe(theta, Vector::Zero(2), {0.3, signal::NoiseKind::kGaussian}, s);
  EXPECT_EQ(z.y, z.v);
}

TEST(Observe, NoiseVariance) {
  RandomStream s(11, {});
  Vector theta = Vector::Ones(3), phi(3);
  phi << 0.3, -1.0, 2.0;
  const int n = 100000;
  double sumsq = 0, sum = 0;
  for (int i = 0; i < n; ++i) {
    const auto o = signal::observe(theta, phi, {0.3, signal::NoiseKind::kGaussian}, s);
    const double r = o.y - phi.dot(theta);
    sum += r;
    sumsq += r * r;
  }
  const double var = sumsq / n - (sum / n) * (sum / n);
  EXPECT_NEAR(var, 0.3, 0.01);
}

signal::SignalSpec fig1_spec() {
  signal::SignalSpec spec;
  spec.theta0 = Vector::Ones(3);
  spec.delta_cov = 0.3 * Matrix::Identity(3, 3);
  auto g1 = sensor1();
  auto g2 = g1;
  g2.C.setZero();
  g2.C(1, 0) = 1;
  auto g3 = g1;
  g3.A.setZero();
  g3.A.col(0).setConstant(0.8);
  g3.C = Vector::Map(std::array<double, 3>{0, 1, 1}.data(), 3).asDiagonal();
  spec.generators = {g1, g2, g3};
  spec.x0.assign(3, Vector::Ones(3));
  spec.noise.assign(3, {0.3, signal::NoiseKind::kGaussian});
  return spec;
}

TEST(SignalSource, ConstructionIdentityAndRecordZero) {
  signal::SignalSource src(fig1_spec(), 5, 0);
  const auto r0 = src.next();
  EXPECT_EQ(r0.k, 0);
  EXPECT_EQ(r0.theta, Vector::Ones(3));
  EXPECT_EQ(r0.sensors[0].phi, Vector::Unit(3, 0));
  for (int k = 1; k < 200; ++k) {
    const auto r = src.next();
    EXPECT_EQ(r.k, k);
    for (const auto& s : r.sensors) {
      const double scale = 1.0 + std::abs(s.y) + s.phi.cwiseAbs().dot(r.theta.cwiseAbs());
      EXPECT_LE(std::abs(s.y - s.phi.dot(r.theta) - s.v), 1e-15 * scale);
    }
  }
}

TEST(SignalSource, BitwiseReproducible) {
  signal::SignalSource a(fig1_spec(), 77, 4), b(fig1_spec(), 77, 4), c(fig1_spec(), 77, 5);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const auto ra = a.next(), rb = b.next(), rc = c.next();
    EXPECT_EQ(ra.theta, rb.theta);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(ra.sensors[i].y, rb.sensors[i].y);
      EXPECT_EQ(ra.sensors[i].phi, rb.sensors[i].phi);
    }
    differs = differs || ra.sensors[0].y != rc.sensors[0].y;
  }
  EXPECT_TRUE(differs);
}

// Each sensor alone spans a proper subspace: its Gram matrix is singular.
TEST(SignalSource, SingleSensorGramIsSingular) {
  signal::SignalSource src(fig1_spec(), 8, 0);
  std::vector<Matrix> gram(3, Matrix::Zero(3, 3));
  Matrix joint = Matrix::Zero(3, 3);
  for (int k = 0; k < 2000; ++k) {
    const auto r = src.next();
    for (int i = 0; i < 3; ++i) {
      const Vector& p = r.sensors[i].phi;
      const Matrix g = p * p.transpose() / (1.0 + p.squaredNorm());
      gram[i] += g;
      joint += g;
    }
  }
  for (const auto& g : gram) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    EXPECT_LT(es.eigenvalues()(0), 1e-12);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(joint);
  EXPECT_GT(es.eigenvalues()(0), 1.0);
}

TEST(Stack, BlockDiagonalAndIdentity) {
  signal::ObservationRecord rec;
  rec.k = 3;
  rec.theta = Vector::Constant(1, 2.0);
  rec.delta = Vector::Constant(1, 0.5);
  rec.sensors = {{3, 4.5, Vector::Constant(1, 2.0), 0.5}, {3, 5.0, Vector::Constant(1, 3.0), -1.0}};
  const auto st = signal::stack(rec);
  Matrix expected(2, 2);
  expected << 2, 0, 0, 3;
  EXPECT_EQ(st.Phi, expected);
  EXPECT_EQ(st.Y - st.Phi.transpose() * st.Theta, st.V);
  EXPECT_EQ(st.Delta, Vector::Constant(2, 0.5));
  rec.sensors[1].k = 4;
  EXPECT_THROW(signal::stack(rec), ValidationError);
}

TEST(Stack, SingleSensorIsIdentityStacking) {
  signal::ObservationRecord rec;
  rec.theta = Vector::Ones(2);
  rec.delta = Vector::Zero(2);
  Vector phi(2);
  phi << 1, 2;
  rec.sensors = {{0, 3.0, phi, 0.0}};
  EXPECT_EQ(signal::stack(rec).Phi, Matrix(phi));
}

}  // namespace
}  // namespace dkf
