#include "apnet/network.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "apnet/errors.hpp"

namespace apnet {

void NetworkParams::validate(int node_count) const {
  if (a == 0.0) fail(ErrorKind::kInvalidConfig, "network.a must be nonzero");
  if (a0() > 0.0) fail(ErrorKind::kInvalidConfig, "need a - k0 <= 0");
  if (!(alpha > 0.0) || !(gamma > 0.0) || !(sigma > 0.0)) {
    fail(ErrorKind::kInvalidConfig, "alpha, gamma, sigma must be positive");
  }
  if (beta.size() != node_count) {
    fail(ErrorKind::kDimensionMismatch,
         "beta has length " + std::to_string(beta.size()) + ", expected " + std::to_string(node_count));
  }
  if ((beta.array() < 0.0).any() || !(beta.array() > 0.0).any()) {
    fail(ErrorKind::kInvalidConfig, "beta must be nonnegative with a positive entry");
  }
  if (!(sensing_radius > 0.0)) fail(ErrorKind::kInvalidConfig, "sensing_radius must be positive");
}

ActivationMatrices ActivationMatrices::passive(int node_count) {
  return {Eigen::VectorXd::Zero(node_count), Eigen::MatrixXd::Zero(node_count, node_count)};
}

double sensing_kernel(double distance, double radius) noexcept {
  if (distance <= 0.0) return 1.0;
  if (distance >= radius) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * distance / radius));
}

ActivationMatrices activation_matrices(std::span<const Point2> agent_positions,
                                       std::span<const Point2> input_positions, double radius) {
  const auto n = static_cast<int>(agent_positions.size());
  const auto m = static_cast<int>(input_positions.size());
  if (m > n) fail(ErrorKind::kDimensionMismatch, "more inputs than agents");
  ActivationMatrices act = ActivationMatrices::passive(n);
  for (int i = 0; i < n; ++i) {
    for (int h = 0; h < m; ++h) {
      const double d = (agent_positions[static_cast<std::size_t>(i)] -
                        input_positions[static_cast<std::size_t>(h)]).norm();
      act.k2(i, h) = sensing_kernel(d, radius);
    }
    act.k1(i) = act.k2.row(i).sum();
  }
  return act;
}

Eigen::VectorXd pad_inputs(std::span<const double> values, int node_count) {
  if (static_cast<int>(values.size()) > node_count) {
    fail(ErrorKind::kDimensionMismatch, "more inputs than agents");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(node_count);
  for (std::size_t h = 0; h < values.size(); ++h) c(static_cast<Eigen::Index>(h)) = values[h];
  return c;
}

std::optional<double> input_average(const Eigen::MatrixXd& k2, const Eigen::VectorXd& c) {
  const double den = k2.sum();
  if (!(den > 0.0)) return std::nullopt;
  return (k2 * c).sum() / den;
}

double nominal_control(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                       const ActivationMatrices& act, const Eigen::VectorXd& c,
                       const NetworkParams& params) {
  const double xi = x(i);
  const double coupling = g.laplacian_row(i, x) + params.beta(i) * xi;
  // sum_h k_ih (x_i - c_h) = k1_i x_i - (K2 c)_i
  const double sensed = act.k1(i) * xi - act.k2.row(i).dot(c);
  return -params.k0 * xi - params.alpha * coupling + p(i) - params.alpha * sensed;
}

double integral_rate(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                     const NetworkParams& params) {
  return -params.gamma * (g.laplacian_row(i, x) + params.sigma * p(i));
}

Eigen::VectorXd consensus_error(const Eigen::VectorXd& x, double epsilon) {
  return x.array() - epsilon;
}

Eigen::VectorXd compact_state_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                                   const ActivationMatrices& act, const Eigen::VectorXd& c,
                                   const NetworkParams& params) {
  const Eigen::MatrixXd& lap = g.laplacian();
  return params.a0() * x - params.alpha * (lap * x) - params.alpha * params.beta.cwiseProduct(x) + p -
         params.alpha * act.k1.cwiseProduct(x) + params.alpha * (act.k2 * c);
}

Eigen::VectorXd compact_integral_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                                      const Graph& g, const NetworkParams& params) {
  return -params.gamma * (g.laplacian() * x) - params.gamma * params.sigma * p;
}

}  // namespace apnet
