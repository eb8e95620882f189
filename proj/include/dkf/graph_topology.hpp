#pragma once

// Weighted communication digraph for the diffusion filter.
//
// Entry (i, j) is the weight a_ij of the arrow i -> j (sensor i transmits to
// sensor j). The combine step at sensor i therefore reads column i.

#include "dkf/linalg.hpp"

#include <cstddef>
#include <string>

namespace dkf::graph {

inline constexpr double kBalanceTolerance = 1e-12;

struct ValidationReport {
  bool nonnegative = false;
  bool balanced = false;
  bool strongly_connected = false;

  bool ok() const { return nonnegative && balanced && strongly_connected; }
  /// Name of the first failed flag, or empty when ok().
  std::string first_failure() const;
};

/// Weighted adjacency matrix. Construction only checks shape; call
/// validate() to check the diffusion assumptions.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(Matrix weights);

  static AdjacencyMatrix identity(std::size_t n);
  /// Complete graph with every weight 1/n.
  static AdjacencyMatrix complete(std::size_t n);
  /// Directed ring i -> i+1 (mod n) with weight `forward` and self-loop
  /// weight 1 - forward.
  static AdjacencyMatrix ring(std::size_t n, double forward);

  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix weights_;
};

ValidationReport validate(const AdjacencyMatrix& adj);

/// Throws ValidationError naming the first failed flag.
void require_valid(const AdjacencyMatrix& adj);

/// Longest shortest directed path over the positive-entry support.
/// Throws ValidationError when the graph is not strongly connected.
int diameter(const AdjacencyMatrix& adj);

/// Diameter with the single-node convention: 1 when n == 1.
int diameter_or_one(const AdjacencyMatrix& adj);

/// A^s for s >= 1.
Matrix power(const AdjacencyMatrix& adj, int s);

/// Smallest entry of A^D, D the diameter (single-node convention applies).
double a_min(const AdjacencyMatrix& adj);

/// A (x) I_m.
Matrix kron_expand(const AdjacencyMatrix& adj, int m);

}  // namespace dkf::graph
