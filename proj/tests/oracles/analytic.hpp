#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace apnet::oracle {

using Edges = std::vector<std::pair<int, int>>;

inline Eigen::MatrixXd adjacency(int n, const Edges& edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v] : edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

/// D - A from the edge list.
inline Eigen::MatrixXd laplacian(int n, const Edges& edges) {
  const Eigen::MatrixXd a = adjacency(n, edges);
  Eigen::MatrixXd l = -a;
  for (int i = 0; i < n; ++i) l(i, i) = a.row(i).sum();
  return l;
}

inline double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Pseudoinverse through the spectral decomposition, dropping null modes.
inline Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& m, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index k = 0; k < inv.size(); ++k) inv(k) = std::abs(inv(k)) > tol ? 1.0 / inv(k) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Oriented incidence, one column per edge, +1 at the first endpoint.
inline Eigen::MatrixXd incidence(int n, const Edges& edges) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    b(edges[e].first, static_cast<Eigen::Index>(e)) = 1.0;
    b(edges[e].second, static_cast<Eigen::Index>(e)) = -1.0;
  }
  return b;
}

inline double kernel(double d, double radius) {
  return d < radius ? 0.5 * (1.0 + std::cos(std::numbers::pi * d / radius)) : 0.0;
}

/// Rows are agents, columns inputs.
inline Eigen::MatrixXd kernel_weights(const std::vector<Eigen::Vector2d>& agents,
                                      const std::vector<Eigen::Vector2d>& inputs, double radius) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(agents.size()), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t h = 0; h < inputs.size(); ++h) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h)) = kernel((agents[i] - inputs[h]).norm(), radius);
    }
  }
  return k;
}

struct NominalGains {
  double a = 1.0, k0 = 1.0, alpha = 1.0, gamma = 1.0, sigma = 1.0;
  Eigen::VectorXd beta;
};

/// Equilibrium of x' = a0 x - alpha(L + beta + K1) x + alpha K c + p,
/// p' = -gamma (L x + sigma p).
inline Eigen::VectorXd nominal_equilibrium(const Eigen::MatrixXd& lap, const NominalGains& g,
                                           const Eigen::MatrixXd& k, const Eigen::VectorXd& c) {
  const Eigen::Index n = lap.rows();
  const Eigen::VectorXd k1 = k.rowwise().sum();
  Eigen::MatrixXd m = (g.a - g.k0) * Eigen::MatrixXd::Identity(n, n) -
                      g.alpha * (lap + Eigen::MatrixXd(g.beta.asDiagonal()) + Eigen::MatrixXd(k1.asDiagonal())) -
                      lap / g.sigma;
  return m.fullPivLu().solve(-g.alpha * (k * c));
}

/// Ultimate bound on the squared consensus error of the nominal loop.
inline double nominal_bound(const Eigen::MatrixXd& lap, const NominalGains& g, double eps_bar, double c_bar_d,
                            double p1, double p2) {
  const auto n = static_cast<double>(lap.rows());
  const double lmin = lambda_min(lap + Eigen::MatrixXd(g.beta.asDiagonal()));
  const double b = g.beta.cwiseAbs().maxCoeff();
  const double al = g.alpha;
  const double first = (eps_bar * b * (al * al * b + 2.0 * n * al * c_bar_d) + n * n * c_bar_d * c_bar_d +
                        std::abs(g.a - g.k0) * n * eps_bar) /
                       (al * al * lmin * lmin);
  const double f = g.gamma * g.sigma * p1 + p2;
  return first + al * al / (g.gamma * g.gamma * g.gamma * g.sigma * g.sigma) * f * f;
}

struct AdaptiveBoundSet {
  double eta1 = 0.0, eta2 = 0.0, level = 0.0;
  double e_x = 0.0, e_z = 0.0, delta_tilde = 0.0;
};

/// Ultimate bounds of the adaptive loop. rate_gain is Gamma, delta_bar and
/// delta_bar_d the norms of the uncertainty and rate bounds.
inline AdaptiveBoundSet adaptive_bounds(const Eigen::MatrixXd& lap, const NominalGains& g, double rate_gain,
                                        double mu, double delta_hat_max, double delta_bar, double delta_bar_d) {
  const Eigen::Index n = lap.rows();
  const Eigen::MatrixXd h =
      g.alpha * (lap + Eigen::MatrixXd(g.beta.asDiagonal())) - (g.a - g.k0) * Eigen::MatrixXd::Identity(n, n);
  const double a1 = lambda_min(h + mu * Eigen::MatrixXd::Identity(n, n));
  const double a0 = std::min(a1, g.sigma);
  const double a2 = delta_bar_d;
  const double g0 = 0.5 * std::min(1.0, 1.0 / g.gamma);
  const double g1 = 0.5 * std::max(1.0, 1.0 / g.gamma);
  AdaptiveBoundSet out;
  out.eta2 = delta_bar + delta_hat_max;
  out.eta1 = a2 / (2.0 * a0) + std::sqrt(a2 * a2 / (4.0 * a0 * a0) + 2.0 / rate_gain * a2 * out.eta2 / a0);
  out.level = g1 * out.eta1 * out.eta1 + out.eta2 * out.eta2 / rate_gain;
  out.e_x = std::sqrt(out.level / g0);
  out.e_z = out.e_x;
  out.delta_tilde = std::sqrt(g1 * rate_gain * out.eta1 * out.eta1 + out.eta2 * out.eta2);
  return out;
}

/// Index of the nearest site, lowest index on ties.
inline int nearest_site(const std::vector<Eigen::Vector2d>& sites, const Eigen::Vector2d& q) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double d = (sites[i] - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace apnet::oracle
