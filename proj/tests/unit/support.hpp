#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "apnet/graph.hpp"
#include "apnet/rng.hpp"

namespace apnet::testing {

/// Random spanning tree plus extra edges with probability `extra`.
inline Graph random_connected_graph(Rng& rng, int n, double extra = 0.2) {
  std::vector<std::pair<int, int>> edges;
  for (int k = 1; k < n; ++k) {
    const int parent = static_cast<int>(rng.unit() * k);
    edges.emplace_back(parent, k);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.unit() < extra) edges.emplace_back(i, j);
    }
  }
  return Graph::build(n, edges);
}

inline Eigen::VectorXd random_vector(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::build(n, edges);
}

}  // namespace apnet::testing
