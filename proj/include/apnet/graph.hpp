#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace apnet {

/// Undirected edge between two 0-indexed nodes, normalized so that u < v.
struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable connected undirected graph with its cached matrix objects.
///
/// Nodes are 0-indexed in the C++ API; scenario files use 1-indexed pairs
/// and are converted at load time. Incidence columns follow edge order and
/// carry +1 at the lower-indexed endpoint and -1 at the higher one.
class Graph {
 public:
  /// Throws InvalidEdge on self-loops / out-of-range endpoints and
  /// DisconnectedGraph when some node is unreachable. Duplicate edges
  /// (in either orientation) are collapsed.
  static Graph build(int node_count, std::span<const std::pair<int, int>> edges);

  int node_count() const noexcept { return node_count_; }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  int degree_of(int i) const { return static_cast<int>(neighbors(i).size()); }

  const Eigen::MatrixXd& degree() const noexcept { return degree_; }
  const Eigen::MatrixXd& adjacency() const noexcept { return adjacency_; }
  const Eigen::MatrixXd& incidence() const noexcept { return incidence_; }
  const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
  const Eigen::MatrixXd& laplacian_pinv() const noexcept { return laplacian_pinv_; }
  /// Ascending eigenvalues of the Laplacian.
  const Eigen::VectorXd& laplacian_spectrum() const noexcept { return spectrum_; }

  /// Sum over neighbors j of (values_i - values_j), i.e. row i of L*values.
  double laplacian_row(int i, const Eigen::VectorXd& values) const;

 private:
  Graph() = default;

  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  Eigen::MatrixXd degree_;
  Eigen::MatrixXd adjacency_;
  Eigen::MatrixXd incidence_;
  Eigen::MatrixXd laplacian_;
  Eigen::MatrixXd laplacian_pinv_;
  Eigen::VectorXd spectrum_;
};

/// Moore-Penrose pseudoinverse of the Laplacian (cached at build time).
inline const Eigen::MatrixXd& laplacian_pinv(const Graph& g) { return g.laplacian_pinv(); }

/// F = L + diag(k). Throws AllZeroK unless k >= 0 with a positive entry,
/// DimensionMismatch when k has the wrong length.
Eigen::MatrixXd regularized_laplacian(const Graph& g, const Eigen::VectorXd& k);

/// 0-indexed edges of a rows x cols 4-neighbour lattice, nodes row-major.
std::vector<std::pair<int, int>> grid_edges(int rows, int cols);

}  // namespace apnet
