#include "dkf/errors.hpp"
#include "dkf/graph_topology.hpp"
#include "dkf/linalg.hpp"

#include <gtest/gtest.h>

#include <queue>

namespace dkf {
namespace {

Matrix example_adjacency() {
  Matrix a(3, 3);
  a << 1.0 / 3, 2.0 / 3, 0, 0, 1.0 / 3, 2.0 / 3, 2.0 / 3, 0, 1.0 / 3;
  return a;
}

Matrix ring4() {
  Matrix a = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    a(i, i) = 0.5;
    a(i, (i + 1) % 4) = 0.5;
  }
  return a;
}

TEST(Linalg, SpdInverseMatchesDirectInverse) {
  Matrix m(2, 2);
  m << 4, 1, 1, 3;
  EXPECT_LT((linalg::spd_inverse(m) * m - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Linalg, SpdInverseRejectsIndefinite) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  EXPECT_THROW(linalg::spd_inverse(m), NumericalError);
}

TEST(Linalg, SpdInverseRejectsBelowFloor) {
  const Matrix m = Vector::Constant(2, 1e-16).asDiagonal();
  EXPECT_THROW(linalg::spd_inverse(m, 1e-14), NumericalError);
}

TEST(Linalg, KroneckerAndBlocks) {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  const Matrix k = linalg::kronecker(a, Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(k(2, 0), 3.0);
  EXPECT_DOUBLE_EQ(k(3, 1), 3.0);
  EXPECT_DOUBLE_EQ(k(2, 1), 0.0);
  const Matrix bd = linalg::block_diagonal({Matrix::Ones(1, 1), 2 * Matrix::Ones(2, 2)});
  EXPECT_EQ(bd.rows(), 3);
  EXPECT_DOUBLE_EQ(bd(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(bd(2, 1), 2.0);
  Vector c1(2), c2(2);
  c1 << 1, 2;
  c2 << 3, 4;
  const Matrix cols = linalg::block_diagonal_columns({c1, c2});
  EXPECT_EQ(cols.rows(), 4);
  EXPECT_EQ(cols.cols(), 2);
  EXPECT_DOUBLE_EQ(cols(2, 1), 3.0);
  EXPECT_DOUBLE_EQ(cols(2, 0), 0.0);
  EXPECT_THROW(linalg::block_diagonal_columns({c1, Vector::Ones(1)}), Error);
}

TEST(Graph, ExampleMatrixPassesAllChecks) {
  const auto r = graph::validate(graph::AdjacencyMatrix(example_adjacency()));
  EXPECT_TRUE(r.nonnegative);
  EXPECT_TRUE(r.balanced);
  EXPECT_TRUE(r.strongly_connected);
}

TEST(Graph, IdentityIsBalancedButDisconnected) {
  const auto r = graph::validate(graph::AdjacencyMatrix::identity(3));
  EXPECT_TRUE(r.balanced);
  EXPECT_FALSE(r.strongly_connected);
}

TEST(Graph, UnbalancedColumns) {
  Matrix a(2, 2);
  a << 0.5, 0.5, 0.4, 0.6;
  const auto r = graph::validate(graph::AdjacencyMatrix(a));
  EXPECT_FALSE(r.balanced);
  EXPECT_NE(r.first_failure().find("balanced"), std::string::npos);
}

TEST(Graph, NonSquareRejected) {
  EXPECT_THROW(graph::AdjacencyMatrix(Matrix::Ones(2, 3)), DimensionError);
}

TEST(Graph, Diameters) {
  EXPECT_EQ(graph::diameter(graph::AdjacencyMatrix(example_adjacency())), 2);
  EXPECT_EQ(graph::diameter(graph::AdjacencyMatrix::complete(5)), 1);
  EXPECT_EQ(graph::diameter(graph::AdjacencyMatrix(ring4())), 3);
  EXPECT_THROW(graph::diameter(graph::AdjacencyMatrix::identity(3)), ValidationError);
  EXPECT_EQ(graph::diameter_or_one(graph::AdjacencyMatrix::identity(1)), 1);
}

TEST(Graph, Powers) {
  const graph::AdjacencyMatrix adj(example_adjacency());
  EXPECT_DOUBLE_EQ(graph::power(adj, 1)(0, 2), 0.0);
  EXPECT_GT(graph::power(adj, 2).minCoeff(), 0.0);
  EXPECT_EQ(graph::power(graph::AdjacencyMatrix::identity(3), 4), Matrix::Identity(3, 3));
  for (int s = 1; s <= 10; ++s) {
    const Matrix p = graph::power(adj, s);
    EXPECT_LT((p.rowwise().sum() - Vector::Ones(3)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p.colwise().sum().transpose() - Vector::Ones(3)).cwiseAbs().maxCoeff(), 1e-10);
    if (s >= 2) EXPECT_GE(p.minCoeff(), graph::a_min(adj) - 1e-15);
  }
}

TEST(Graph, AMin) {
  EXPECT_NEAR(graph::a_min(graph::AdjacencyMatrix(example_adjacency())), 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(graph::a_min(graph::AdjacencyMatrix::complete(4)), 0.25, 1e-15);
  const graph::AdjacencyMatrix r(ring4());
  Matrix p = ring4() * ring4() * ring4();
  EXPECT_NEAR(graph::a_min(r), p.minCoeff(), 1e-15);
  EXPECT_NEAR(graph::a_min(r), 0.125, 1e-15);
}

TEST(Graph, KronExpand) {
  EXPECT_EQ(graph::kron_expand(graph::AdjacencyMatrix(Matrix::Ones(1, 1)), 3),
            Matrix::Identity(3, 3));
  EXPECT_EQ(graph::kron_expand(graph::AdjacencyMatrix::identity(2), 2), Matrix::Identity(4, 4));
  const Matrix k = graph::kron_expand(graph::AdjacencyMatrix(example_adjacency()), 3);
  ASSERT_EQ(k.rows(), 9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(k.block(3 * i, 3 * j, 3, 3), example_adjacency()(i, j) * Matrix::Identity(3, 3));
    }
  }
}

// Diameter equals the smallest power with no zero entry (positive diagonal),
// checked against a BFS oracle on random rings with chords.
TEST(Graph, DiameterMatchesPowerPositivity) {
  for (int n = 2; n <= 7; ++n) {
    for (int chord = 0; chord < n; ++chord) {
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        a(i, i) += 1.0 / 3;
        a(i, (i + 1) % n) += 1.0 / 3;
        a(i, (i + chord) % n) += 1.0 / 3;
      }
      const graph::AdjacencyMatrix adj(a);
      ASSERT_TRUE(graph::validate(adj).ok());
      int s = 1;
      while (graph::power(adj, s).minCoeff() <= 0.0) ++s;
      // BFS oracle
      int oracle = 0;
      for (int src = 0; src < n; ++src) {
        std::vector<int> dist(n, -1);
        std::queue<int> q;
        dist[src] = 0;
        q.push(src);
        while (!q.empty()) {
          const int u = q.front();
          q.pop();
          for (int v = 0; v < n; ++v) {
            if (a(u, v) > 0 && dist[v] < 0) {
              dist[v] = dist[u] + 1;
              q.push(v);
            }
          }
        }
        for (int d : dist) oracle = std::max(oracle, d);
      }
      EXPECT_EQ(graph::diameter(adj), oracle);
      EXPECT_EQ(graph::diameter(adj), s);
    }
  }
}

}  // namespace
}  // namespace dkf
