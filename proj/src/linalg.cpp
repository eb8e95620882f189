#include "dkf/linalg.hpp"

#include "dkf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dkf::linalg {

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix spd_inverse(const Matrix& m, double min_eigenvalue_floor) {
  if (m.rows() != m.cols()) {
    throw DimensionError("spd_inverse: matrix is not square");
  }
  const Matrix s = symmetrize(m);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("spd_inverse: Cholesky factorization failed (lambda_min = " +
                         std::to_string(min_eigenvalue(s)) + ")");
  }
  Matrix inv = symmetrize(llt.solve(Matrix::Identity(s.rows(), s.cols())));
  // lambda_min >= 1 / ||inv||_F; fall back to the exact spectrum only when
  // that cheap bound is inconclusive.
  const double frob = inv.norm();
  if (!std::isfinite(frob) || frob * min_eigenvalue_floor > 1.0) {
    const double lmin = min_eigenvalue(s);
    if (!(lmin >= min_eigenvalue_floor)) {
      throw NumericalError("spd_inverse: lambda_min = " + std::to_string(lmin) +
                           " below floor " + std::to_string(min_eigenvalue_floor));
    }
  }
  return inv;
}

bool is_symmetric(const Matrix& m, double relative_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= relative_tol * scale;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  Matrix out = Matrix::Zero(total, total);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    out.block(offset, offset, b.rows(), b.cols()) = b;
    offset += b.rows();
  }
  return out;
}

Matrix block_diagonal_columns(const std::vector<Vector>& columns) {
  const auto n = static_cast<Eigen::Index>(columns.size());
  const Eigen::Index m = n == 0 ? 0 : columns.front().size();
  Matrix out = Matrix::Zero(m * n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (columns[i].size() != m) {
      throw DimensionError("block_diagonal_columns: ragged column sizes");
    }
    out.block(i * m, i, m, 1) = columns[i];
  }
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace dkf::linalg
