#include "coopmatch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "coopmatch/errors.hpp"

namespace coopmatch {

Digraph::Digraph(Matrix adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() != adjacency_.cols() || adjacency_.rows() < 1) {
    throw InvalidParameter("adjacency matrix must be square with at least one node");
  }
  const auto n = adjacency_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency_(i, j);
      if (!std::isfinite(a) || a < 0.0) {
        throw InvalidParameter("edge weight a(" + std::to_string(i) + "," + std::to_string(j) +
                               ") must be finite and non-negative");
      }
      if (i == j && a != 0.0) {
        throw InvalidParameter("self loop on node " + std::to_string(i));
      }
      if (i == 0 && a != 0.0) {
        throw InvalidParameter("the leader (node 0) cannot receive from node " + std::to_string(j));
      }
    }
  }
}

Digraph Digraph::empty(std::size_t node_count) {
  const auto n = static_cast<Eigen::Index>(node_count);
  return Digraph(Matrix::Zero(n, n));
}

Digraph Digraph::with_edge(std::size_t from, std::size_t to, double weight) const {
  Matrix a = adjacency_;
  if (from >= node_count() || to >= node_count()) {
    throw InvalidParameter("edge endpoint out of range");
  }
  a(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = weight;
  return Digraph(std::move(a));
}

Digraph Digraph::without_edge(std::size_t from, std::size_t to) const {
  return with_edge(from, to, 0.0);
}

std::vector<Digraph::Neighbor> Digraph::neighbors(std::size_t i) const {
  std::vector<Neighbor> out;
  const auto row = static_cast<Eigen::Index>(i);
  for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) {
    if (adjacency_(row, j) > 0.0) out.push_back({static_cast<std::size_t>(j), adjacency_(row, j)});
  }
  return out;
}

LaplacianDecomposition build_laplacian(const Digraph& g) {
  const Matrix& a = g.adjacency();
  const auto n = a.rows();
  LaplacianDecomposition dec;
  dec.full_laplacian = -a;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row_sum += a(i, j);
    }
    dec.full_laplacian(i, i) = row_sum;
  }
  dec.follower_submatrix = dec.full_laplacian.bottomRightCorner(n - 1, n - 1);

  const Matrix& h = dec.follower_submatrix;
  dec.symmetric = h.size() == 0 || (h - h.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance;
  if (dec.symmetric && h.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    dec.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(dec.eigenvalues.begin(), dec.eigenvalues.end(), std::greater<>());
  }
  return dec;
}

bool is_connected(const Digraph& g) {
  const std::size_t n = g.node_count();
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(g.weight(i, j) - g.weight(j, i)) > kSymmetryTolerance) return false;
    }
  }
  // Information flows j -> i whenever a_ij > 0; walk it forward from the leader.
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const std::size_t j = queue.front();
    queue.pop_front();
    for (std::size_t i = 1; i < n; ++i) {
      if (!seen[i] && g.weight(i, j) > 0.0) {
        seen[i] = true;
        queue.push_back(i);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

double min_eigenvalue(const LaplacianDecomposition& dec) {
  if (!dec.symmetric || dec.eigenvalues.empty()) {
    throw NotConnected("follower submatrix H is not symmetric");
  }
  const double lambda_n = dec.eigenvalues.back();
  if (lambda_n <= kPositiveDefiniteTolerance) {
    throw NotConnected("follower submatrix H is not positive definite (min eigenvalue " +
                       std::to_string(lambda_n) + ")");
  }
  return lambda_n;
}

}  // namespace coopmatch
