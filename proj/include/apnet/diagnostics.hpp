#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "apnet/adaptive.hpp"
#include "apnet/graph.hpp"
#include "apnet/network.hpp"

namespace apnet {

/// Input-side constants of the nominal ultimate bound. epsilon_bar and
/// c_bar_d come from declared input bounds, p1_bar and p2_bar from the trace
/// maxima of ||K_c c|| and ||d/dt K_c c||, where K_c c = B^T L^+ (eps k1 - K2 c).
struct NominalBoundInputs {
  double epsilon_bar = 0.0;
  double c_bar_d = 0.0;
  double p1_bar = 0.0;
  double p2_bar = 0.0;
};

struct NominalBound {
  double bound = 0.0;
  double first_term = 0.0;   // graph/input part, shrinks with alpha
  double second_term = 0.0;  // integral-action forcing part
  double lambda_min_f = 0.0;
  double beta_norm = 0.0;
};

/// Ultimate bound on ||delta||^2 for the nominal loop. Throws InvalidSpectrum
/// when lambda_min(L + beta) <= 0.
NominalBound theorem1_bound(const NetworkParams& params, const Graph& g, const NominalBoundInputs& in);

struct AdaptiveBounds {
  double gamma0 = 0.0, gamma1 = 0.0;
  double eta1 = 0.0, eta2 = 0.0;
  double alpha0 = 0.0, alpha1 = 0.0, alpha2 = 0.0;
  double delta_bar = 0.0;
  double e_x = 0.0, e_z = 0.0, delta_tilde = 0.0;
  double lyapunov_level = 0.0;  // gamma1 eta1^2 + Gamma^-1 eta2^2
};

/// Ultimate bounds on ||e_x||, ||e_z||, ||Delta_tilde||. delta_bar and
/// delta_bar_d are the 2-norms of the per-agent amplitude and rate bounds.
/// Throws InvalidSpectrum when lambda_min(H + mu I) <= 0.
AdaptiveBounds theorem2_bounds(const AdaptiveParams& adaptive, const NetworkParams& params, const Graph& g,
                               double delta_bar, double delta_bar_d);
AdaptiveBounds theorem2_bounds(const AdaptiveParams& adaptive, const NetworkParams& params, const Graph& g,
                               const UncertaintyModel& model);

/// V = 0.5 |e_x|^2 + |e_z|^2 / (2 gamma) + |Delta_tilde|^2 / Gamma.
double lyapunov_value(const Eigen::VectorXd& e_x, const Eigen::VectorXd& e_z, const Eigen::VectorXd& dtilde,
                      double gamma, double gamma_rate);

struct LyapunovSeries {
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> v_dot;  // central differences, one-sided at the ends
};

LyapunovSeries lyapunov_series(std::span<const double> t, std::span<const double> v);

/// Central (one-sided at the ends) finite-difference derivative.
std::vector<double> finite_difference(std::span<const double> t, std::span<const double> v);

/// Earliest sample time after which `values` stays at or below `level` for
/// at least `hold` seconds; empty when that never happens.
std::optional<double> transient_cutoff(std::span<const double> t, std::span<const double> values, double level,
                                       double hold = 1.0);

/// Largest value at or after `from`.
double max_after(std::span<const double> t, std::span<const double> values, double from);

struct BoundCheck {
  std::string name;
  double bound = 0.0;
  double observed_max = 0.0;  // post-transient
  std::optional<double> cutoff;
  bool satisfied = false;
};

}  // namespace apnet
