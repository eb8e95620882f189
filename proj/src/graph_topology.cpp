#include "dkf/graph_topology.hpp"

#include "dkf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace dkf::graph {
namespace {

// Breadth-first distances from `source` over the support of `w`.
std::vector<int> bfs_distances(const Matrix& w, Eigen::Index source) {
  const Eigen::Index n = w.rows();
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::deque<Eigen::Index> frontier{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.front();
    frontier.pop_front();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (w(u, v) > 0.0 && dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

std::string ValidationReport::first_failure() const {
  if (!nonnegative) return "nonnegative";
  if (!balanced) return "balanced";
  if (!strongly_connected) return "strongly_connected";
  return {};
}

AdjacencyMatrix::AdjacencyMatrix(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) {
    throw DimensionError("adjacency matrix must be square, got " +
                         std::to_string(weights_.rows()) + "x" +
                         std::to_string(weights_.cols()));
  }
  if (weights_.rows() < 1) {
    throw DimensionError("adjacency matrix must have at least one sensor");
  }
}

AdjacencyMatrix AdjacencyMatrix::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return AdjacencyMatrix(Matrix::Identity(k, k));
}

AdjacencyMatrix AdjacencyMatrix::complete(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return AdjacencyMatrix(Matrix::Constant(k, k, 1.0 / static_cast<double>(n)));
}

AdjacencyMatrix AdjacencyMatrix::ring(std::size_t n, double forward) {
  const auto k = static_cast<Eigen::Index>(n);
  Matrix w = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    w(i, i) += 1.0 - forward;
    w(i, (i + 1) % k) += forward;
  }
  return AdjacencyMatrix(std::move(w));
}

ValidationReport validate(const AdjacencyMatrix& adj) {
  const Matrix& w = adj.weights();
  ValidationReport report;
  report.nonnegative = w.allFinite() && (w.array() >= 0.0).all();

  const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  report.balanced = row_err <= kBalanceTolerance && col_err <= kBalanceTolerance;

  report.strongly_connected = true;
  const Matrix wt = w.transpose();
  // Strongly connected iff vertex 0 reaches everyone in G and in G reversed.
  for (const Matrix* g : {&w, &wt}) {
    const auto dist = bfs_distances(*g, 0);
    if (std::any_of(dist.begin(), dist.end(), [](int d) { return d < 0; })) {
      report.strongly_connected = false;
    }
  }
  return report;
}

void require_valid(const AdjacencyMatrix& adj) {
  const auto report = validate(adj);
  if (!report.ok()) {
    throw ValidationError("adjacency matrix fails check: " + report.first_failure());
  }
}

int diameter(const AdjacencyMatrix& adj) {
  const Matrix& w = adj.weights();
  int diam = 0;
  for (Eigen::Index s = 0; s < w.rows(); ++s) {
    const auto dist = bfs_distances(w, s);
    for (std::size_t t = 0; t < dist.size(); ++t) {
      if (dist[t] < 0) {
        throw ValidationError("diameter undefined: graph is not strongly connected");
      }
      if (static_cast<Eigen::Index>(t) != s) diam = std::max(diam, dist[t]);
    }
  }
  return diam;
}

int diameter_or_one(const AdjacencyMatrix& adj) {
  return adj.size() == 1 ? 1 : diameter(adj);
}

Matrix power(const AdjacencyMatrix& adj, int s) {
  if (s < 1) throw ValidationError("matrix power requires s >= 1");
  Matrix out = adj.weights();
  for (int i = 1; i < s; ++i) out = out * adj.weights();
  return out;
}

double a_min(const AdjacencyMatrix& adj) {
  if (!validate(adj).strongly_connected) {
    throw ValidationError("a_min undefined: graph is not strongly connected");
  }
  return power(adj, diameter_or_one(adj)).minCoeff();
}

Matrix kron_expand(const AdjacencyMatrix& adj, int m) {
  if (m < 1) throw DimensionError("kron_expand requires m >= 1");
  return linalg::kronecker(adj.weights(), Matrix::Identity(m, m));
}

}  // namespace dkf::graph
