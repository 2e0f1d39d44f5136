#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "apnet/graph.hpp"

namespace apnet {

using Point2 = Eigen::Vector2d;

/// Gains of the nominal distributed controller and integral action.
struct NetworkParams {
  double a = 1.0;       // open-loop agent pole, nonzero
  double k0 = 1.0;      // state feedback gain, a - k0 <= 0
  double alpha = 1.0;   // coupling gain
  double gamma = 1.0;   // integral gain
  double sigma = 1.0;   // integral leak
  Eigen::VectorXd beta; // per-agent self-anchoring, >= 0 with a positive entry
  double sensing_radius = 1.0;

  double a0() const noexcept { return a - k0; }
  /// Throws InvalidConfig (or DimensionMismatch for beta) on violated invariants.
  void validate(int node_count) const;
};

struct NetworkState {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
  double t = 0.0;

  static NetworkState initial(const Eigen::VectorXd& x0) {
    return NetworkState{x0, Eigen::VectorXd::Zero(x0.size()), 0.0};
  }
};

/// k1 is the diagonal of K1 (row sums of K2). K2 is N x N, columns past the
/// number of inputs are zero.
struct ActivationMatrices {
  Eigen::VectorXd k1;
  Eigen::MatrixXd k2;

  static ActivationMatrices passive(int node_count);
  bool is_active(int i) const { return k1(i) > 0.0; }
  int active_count() const { return static_cast<int>((k1.array() > 0.0).count()); }
  double total_weight() const { return k2.sum(); }
};

/// Cosine taper: 1 at distance 0, 0 at and beyond the sensing radius, C1 at
/// both ends and nonincreasing in between.
double sensing_kernel(double distance, double radius) noexcept;

ActivationMatrices activation_matrices(std::span<const Point2> agent_positions,
                                       std::span<const Point2> input_positions, double radius);

/// Zero-pads the m input values to length N. Throws DimensionMismatch when m > N.
Eigen::VectorXd pad_inputs(std::span<const double> values, int node_count);

/// Kernel-weighted average of the applied inputs; empty when no agent senses
/// any input (the caller decides what to hold).
std::optional<double> input_average(const Eigen::MatrixXd& k2, const Eigen::VectorXd& c);

/// Per-agent controller. `x` is whatever agent i and its neighbours exchange
/// (true states in the nominal loop, corrupted ones in the adaptive loop);
/// only x_i, x_j for neighbours j, p_i and row i of K2 are read.
double nominal_control(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                       const ActivationMatrices& act, const Eigen::VectorXd& c,
                       const NetworkParams& params);

double integral_rate(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                     const NetworkParams& params);

Eigen::VectorXd consensus_error(const Eigen::VectorXd& x, double epsilon);

/// Vectorized closed loop, used to cross-check the per-agent path.
Eigen::VectorXd compact_state_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Graph& g,
                                   const ActivationMatrices& act, const Eigen::VectorXd& c,
                                   const NetworkParams& params);
Eigen::VectorXd compact_integral_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                                      const Graph& g, const NetworkParams& params);

}  // namespace apnet
