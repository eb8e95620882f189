#pragma once

// Small dense-matrix helpers shared by the filter and the diagnostics.

#include <Eigen/Dense>

#include <vector>

namespace dkf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace linalg {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

/// Spectral norm (largest singular value); valid for non-symmetric input.
double spectral_norm(const Matrix& m);

/// Inverse of a symmetric positive-definite matrix via Cholesky.
/// Throws NumericalError when the smallest eigenvalue falls below
/// `min_eigenvalue_floor` or the factorization fails.
Matrix spd_inverse(const Matrix& m, double min_eigenvalue_floor = 1e-14);

bool is_symmetric(const Matrix& m, double relative_tol = 1e-12);

/// Block-diagonal assembly of square blocks.
Matrix block_diagonal(const std::vector<Matrix>& blocks);

/// Block-diagonal assembly of column vectors: an (m*n) x n matrix with
/// column i holding `columns[i]` in rows [i*m, (i+1)*m).
Matrix block_diagonal_columns(const std::vector<Vector>& columns);

Matrix kronecker(const Matrix& a, const Matrix& b);

}  // namespace linalg
}  // namespace dkf
