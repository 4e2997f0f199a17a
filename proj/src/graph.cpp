#include "distopt/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "distopt/rng.hpp"

namespace distopt {

namespace {

bool is_connected(int n, const std::vector<std::vector<int>>& adj) {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

std::vector<std::vector<int>> adjacency_lists(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& lst : adj) std::sort(lst.begin(), lst.end());
  return adj;
}

// Orthonormal completion of u = 1/sqrt(N): columns 2..N of the Householder
// reflector mapping e_1 to u. Deterministic and exactly orthogonal to 1 up
// to roundoff.
Eigen::MatrixXd ones_complement_basis(int n) {
  if (n == 1) return Eigen::MatrixXd(1, 0);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd v = u;
  v[0] -= 1.0;
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(n, n) - (2.0 / v.squaredNorm()) * (v * v.transpose());
  return h.rightCols(n - 1);
}

}  // namespace

Graph Graph::from_edges(int n_nodes, std::vector<std::pair<int, int>> edges) {
  if (n_nodes < 1) throw std::invalid_argument("graph: n_nodes must be >= 1");
  std::set<std::pair<int, int>> unique_edges;
  for (auto& [i, j] : edges) {
    if (i == j) throw std::invalid_argument("graph: self-loop at node " + std::to_string(i + 1));
    if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (i > j) std::swap(i, j);
    unique_edges.emplace(i, j);
  }

  Graph g;
  g.n_nodes_ = n_nodes;
  g.edges_.assign(unique_edges.begin(), unique_edges.end());
  g.neighbors_ = adjacency_lists(n_nodes, g.edges_);
  if (!is_connected(n_nodes, g.neighbors_))
    throw std::invalid_argument("graph: edge set is not connected");

  // Integer degree arithmetic before casting keeps L*1 exactly zero.
  g.laplacian_ = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int i = 0; i < n_nodes; ++i) g.laplacian_(i, i) = static_cast<double>(g.degree(i));
  for (const auto& [i, j] : g.edges_) {
    g.laplacian_(i, j) = -1.0;
    g.laplacian_(j, i) = -1.0;
  }

  g.r_basis_ = ones_complement_basis(n_nodes);
  g.spectrum_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.laplacian_).eigenvalues();
  return g;
}

Graph Graph::erdos_renyi(int n_nodes, double edge_prob, std::uint64_t seed) {
  if (n_nodes < 2) throw std::invalid_argument("erdos_renyi: n_nodes must be >= 2");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0))
    throw std::invalid_argument("erdos_renyi: edge_prob must be in (0, 1]");

  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_nodes; ++i)
      for (int j = i + 1; j < n_nodes; ++j)
        if (rng.uniform01() < edge_prob) edges.emplace_back(i, j);
    const auto adj = adjacency_lists(n_nodes, edges);
    if (is_connected(n_nodes, adj)) return from_edges(n_nodes, std::move(edges));
  }
  std::ostringstream msg;
  msg << "erdos_renyi: no connected sample in " << kMaxAttempts << " attempts (n_nodes=" << n_nodes
      << ", edge_prob=" << edge_prob << ")";
  throw std::runtime_error(msg.str());
}

Graph Graph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("graph: cannot open " + path);
  int n = 0;
  if (!(in >> n)) throw std::runtime_error("graph: missing node count in " + path);
  std::vector<std::pair<int, int>> edges;
  int i = 0, j = 0;
  while (in >> i >> j) edges.emplace_back(i - 1, j - 1);
  return from_edges(n, std::move(edges));
}

void Graph::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("graph: cannot write " + path);
  out << n_nodes_ << "\n";
  for (const auto& [i, j] : edges_) out << i + 1 << " " << j + 1 << "\n";
}

Eigen::MatrixXd Graph::reduced_laplacian() const {
  return r_basis_.transpose() * laplacian_ * r_basis_;
}

Graph Graph::without_node(int node) const {
  if (node < 0 || node >= n_nodes_) throw std::invalid_argument("graph: node out of range");
  if (n_nodes_ <= 1) throw std::invalid_argument("graph: cannot remove the last node");
  std::vector<std::pair<int, int>> edges;
  for (const auto& [i, j] : edges_) {
    if (i == node || j == node) continue;
    edges.emplace_back(i > node ? i - 1 : i, j > node ? j - 1 : j);
  }
  try {
    return from_edges(n_nodes_ - 1, std::move(edges));
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("graph: removing node " + std::to_string(node + 1) +
                             " disconnects the graph");
  }
}

Graph Graph::with_node(const std::vector<int>& neighbors_of_new) const {
  auto edges = edges_;
  for (int nb : neighbors_of_new) {
    if (nb < 0 || nb >= n_nodes_) throw std::invalid_argument("graph: new-node neighbor out of range");
    edges.emplace_back(nb, n_nodes_);
  }
  return from_edges(n_nodes_ + 1, std::move(edges));
}

Eigen::VectorXd laplacian_spectrum(const Graph& g) { return g.spectrum(); }

Eigen::MatrixXd reduced_laplacian(const Graph& g) { return g.reduced_laplacian(); }

}  // namespace distopt
