#include "apnet/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

#include "apnet/errors.hpp"

namespace apnet {

Graph Graph::build(int node_count, std::span<const std::pair<int, int>> edges) {
  if (node_count < 2) {
    fail(ErrorKind::kInvalidEdge, "graph needs at least 2 nodes, got " + std::to_string(node_count));
  }
  std::set<Edge> unique;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count) {
      fail(ErrorKind::kInvalidEdge,
           "edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    }
    if (a == b) fail(ErrorKind::kInvalidEdge, "self-loop at node " + std::to_string(a));
    unique.insert(Edge{std::min(a, b), std::max(a, b)});
  }

  Graph g;
  g.node_count_ = node_count;
  g.edges_.assign(unique.begin(), unique.end());
  g.neighbors_.assign(static_cast<std::size_t>(node_count), {});
  for (const Edge& e : g.edges_) {
    g.neighbors_[static_cast<std::size_t>(e.u)].push_back(e.v);
    g.neighbors_[static_cast<std::size_t>(e.v)].push_back(e.u);
  }

  // BFS from node 0.
  std::vector<bool> seen(static_cast<std::size_t>(node_count), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : g.neighbors_[static_cast<std::size_t>(i)]) {
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  if (reached != node_count) {
    fail(ErrorKind::kDisconnectedGraph,
         std::to_string(node_count - reached) + " node(s) unreachable from node 1");
  }

  const int n = node_count;
  const int m = g.edge_count();
  g.degree_ = Eigen::MatrixXd::Zero(n, n);
  g.adjacency_ = Eigen::MatrixXd::Zero(n, n);
  g.incidence_ = Eigen::MatrixXd::Zero(n, m);
  for (int k = 0; k < m; ++k) {
    const Edge& e = g.edges_[static_cast<std::size_t>(k)];
    g.adjacency_(e.u, e.v) = 1.0;
    g.adjacency_(e.v, e.u) = 1.0;
    g.incidence_(e.u, k) = 1.0;
    g.incidence_(e.v, k) = -1.0;
  }
  for (int i = 0; i < n; ++i) g.degree_(i, i) = g.degree_of(i);
  g.laplacian_ = g.degree_ - g.adjacency_;

  // Pseudoinverse by eigendecomposition, dropping eigenvalues below
  // 1e-10 * lambda_max (the single zero mode of a connected graph).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.laplacian_);
  g.spectrum_ = eig.eigenvalues();
  const double threshold = 1e-10 * g.spectrum_.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (g.spectrum_(i) > threshold) inv(i) = 1.0 / g.spectrum_(i);
  }
  const Eigen::MatrixXd& q = eig.eigenvectors();
  g.laplacian_pinv_ = q * inv.asDiagonal() * q.transpose();
  // Symmetrize away round-off.
  g.laplacian_pinv_ = 0.5 * (g.laplacian_pinv_ + g.laplacian_pinv_.transpose()).eval();
  return g;
}

double Graph::laplacian_row(int i, const Eigen::VectorXd& values) const {
  double sum = 0.0;
  const double vi = values(i);
  for (int j : neighbors(i)) sum += vi - values(j);
  return sum;
}

Eigen::MatrixXd regularized_laplacian(const Graph& g, const Eigen::VectorXd& k) {
  if (k.size() != g.node_count()) {
    fail(ErrorKind::kDimensionMismatch, "k has length " + std::to_string(k.size()) +
                                            ", expected " + std::to_string(g.node_count()));
  }
  if ((k.array() < 0.0).any()) fail(ErrorKind::kAllZeroK, "k must be entrywise nonnegative");
  if (!(k.array() > 0.0).any()) fail(ErrorKind::kAllZeroK, "k needs at least one positive entry");
  Eigen::MatrixXd f = g.laplacian();
  f.diagonal() += k;
  return f;
}

std::vector<std::pair<int, int>> grid_edges(int rows, int cols) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) out.emplace_back(id, id + 1);
      if (r + 1 < rows) out.emplace_back(id, id + cols);
    }
  }
  return out;
}

}  // namespace apnet
