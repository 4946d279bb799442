#pragma once

#include <cstddef>
#include <vector>

#include "coopmatch/linalg.hpp"

namespace coopmatch {

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPositiveDefiniteTolerance = 1e-10;

/// Weighted communication digraph over nodes 0..N, node 0 being the leader.
///
/// adjacency(i, j) = a_ij > 0 means node i receives information from node j.
/// The constructor enforces a_ii = 0, a_0j = 0 and non-negative weights.
class Digraph {
 public:
  explicit Digraph(Matrix adjacency);

  /// Graph with `node_count` nodes and no edges.
  static Digraph empty(std::size_t node_count);

  /// Adds (or overwrites) the weight of the edge from -> to.
  Digraph with_edge(std::size_t from, std::size_t to, double weight) const;
  Digraph without_edge(std::size_t from, std::size_t to) const;

  std::size_t node_count() const { return static_cast<std::size_t>(adjacency_.rows()); }
  std::size_t follower_count() const { return node_count() - 1; }
  double weight(std::size_t i, std::size_t j) const { return adjacency_(i, j); }
  const Matrix& adjacency() const { return adjacency_; }

  struct Neighbor {
    std::size_t node;
    double weight;
  };
  /// In-neighbors of node i with their weights a_ij, ascending by node id.
  std::vector<Neighbor> neighbors(std::size_t i) const;

  friend bool operator==(const Digraph& a, const Digraph& b) { return same(a.adjacency_, b.adjacency_); }

 private:
  Matrix adjacency_;
};

struct LaplacianDecomposition {
  Matrix full_laplacian;
  Matrix follower_submatrix;
  bool symmetric = false;
  // Descending; empty unless the follower submatrix is symmetric.
  std::vector<double> eigenvalues;
};

LaplacianDecomposition build_laplacian(const Digraph& g);

/// Leader reaches every follower and the follower subgraph is undirected.
bool is_connected(const Digraph& g);

/// Smallest eigenvalue of H. Throws NotConnected when H is not symmetric
/// positive definite.
double min_eigenvalue(const LaplacianDecomposition& dec);

}  // namespace coopmatch
