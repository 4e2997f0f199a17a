#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace distopt {

// Undirected connected communication graph with unit edge weights.
// Construction fails if the edge set does not connect all nodes, so a Graph
// in hand is always connected. The Laplacian is assembled from integer
// degrees, and r_basis() is a deterministic orthonormal basis of ker(1^T)
// (Householder completion of 1/sqrt(N)), so downstream trajectories are
// reproducible.
class Graph {
 public:
  // Edges are unordered pairs of 0-based node indices.
  static Graph from_edges(int n_nodes, std::vector<std::pair<int, int>> edges);

  // Samples G(n, p) and resamples with incremented seed until connected
  // (at most 1000 attempts). Deterministic per (n_nodes, edge_prob, seed).
  static Graph erdos_renyi(int n_nodes, double edge_prob, std::uint64_t seed);

  // Edge-list text format: first line "N", then one "i j" line per edge,
  // 1-indexed.
  static Graph load(const std::string& path);
  void save(const std::string& path) const;

  int n_nodes() const { return n_nodes_; }
  // Sorted (i < j, lexicographic) 0-based pairs.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }

  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  // N x (N-1), orthonormal columns spanning ker(1^T).
  const Eigen::MatrixXd& r_basis() const { return r_basis_; }

  // Ordered eigenvalues of the Laplacian, lambda_1 <= ... <= lambda_N.
  const Eigen::VectorXd& spectrum() const { return spectrum_; }
  double lambda2() const { return spectrum_[1]; }
  double lambda_max() const { return spectrum_[n_nodes_ - 1]; }

  // Lambda_P = R^T L R, (N-1) x (N-1) symmetric positive definite.
  Eigen::MatrixXd reduced_laplacian() const;

  // Induced subgraph after deleting one node (remaining nodes reindexed in
  // order). Throws if the result is disconnected or empty.
  Graph without_node(int node) const;
  // Extended graph with one new node appended as index N, connected to
  // `neighbors_of_new`. Throws if the result is disconnected.
  Graph with_node(const std::vector<int>& neighbors_of_new) const;

  bool operator==(const Graph& other) const {
    return n_nodes_ == other.n_nodes_ && edges_ == other.edges_;
  }

 private:
  Graph() = default;

  int n_nodes_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
  Eigen::MatrixXd laplacian_;
  Eigen::MatrixXd r_basis_;
  Eigen::VectorXd spectrum_;
};

// Ordered Laplacian eigenvalues of g (same as g.spectrum(); kept as a free
// function for symmetry with the other spectral helpers).
Eigen::VectorXd laplacian_spectrum(const Graph& g);

// Lambda_P = R^T L R.
Eigen::MatrixXd reduced_laplacian(const Graph& g);

}  // namespace distopt
