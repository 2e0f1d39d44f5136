#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "apnet/graph.hpp"
#include "apnet/network.hpp"
#include "apnet/projection.hpp"
#include "apnet/rng.hpp"

namespace apnet {

/// Which form of the estimator couplings to use.
///
/// kLiteral keeps two terms exactly as they are usually typeset: the
/// active-input term of the corrective signal v_i enters with a minus sign,
/// and the integral estimate carries a +gamma * sum(dhat_i - dhat_j) drive.
/// With those terms the corrected loop does not cancel the measurement
/// corruption and the estimator diverges (see tests). kConsistent flips the
/// sign of the active-input term and drops the extra integral-estimate drive,
/// which is the form whose estimation errors obey
///   e_x' = -(H + mu I + alpha K1) e_x - a dtilde + B e_z + Delta'
///   e_z' = -gamma sigma e_z - gamma B^T e_x.
enum class EstimatorLaw { kConsistent, kLiteral };

EstimatorLaw parse_estimator_law(std::string_view name);
std::string_view to_string(EstimatorLaw law);

struct AdaptiveParams {
  double gamma_rate = 1.0;     // adaptation rate
  double mu = 1.0;             // observer gain
  double delta_hat_max = 1.0;  // projection bound
  double nu_fraction = 0.05;
  bool constant_mode = false;  // unprojected update for time-invariant uncertainty
  EstimatorLaw law = EstimatorLaw::kConsistent;

  void validate() const;
  ProjectionBounds bounds(Eigen::Index n) const {
    return ProjectionBounds::symmetric(n, delta_hat_max, nu_fraction);
  }
};

struct AdaptiveState {
  Eigen::VectorXd delta_hat;
  Eigen::VectorXd x_hat;
  Eigen::VectorXd p_hat;

  /// e_x = x_tilde - x_hat - delta_hat.
  Eigen::VectorXd e_x(const Eigen::VectorXd& x_tilde) const { return x_tilde - x_hat - delta_hat; }
};

/// Per-agent additive measurement corruption Delta_i(t) with declared bounds.
class UncertaintyModel {
 public:
  enum class Kind { kNone, kConstant, kSinusoidal, kSmoothedSteps };

  static UncertaintyModel none(int node_count);
  static UncertaintyModel constant(Eigen::VectorXd values);
  /// Delta_i(t) = amplitude_i * sin(omega_i t + phase_i).
  static UncertaintyModel sinusoidal(Eigen::VectorXd amplitude, Eigen::VectorXd omega,
                                     Eigen::VectorXd phase);
  /// Level k (column k of `levels`) holds on [k*period, (k+1)*period) after a
  /// cubic smoothstep of length `ramp` from level k-1; the last level persists.
  static UncertaintyModel smoothed_steps(Eigen::MatrixXd levels, double period, double ramp);

  Kind kind() const noexcept { return kind_; }
  int size() const noexcept { return static_cast<int>(bound_.size()); }
  double value(int i, double t) const;
  double rate(int i, double t) const;
  Eigen::VectorXd values(double t) const;
  Eigen::VectorXd rates(double t) const;
  /// |Delta_i(t)| <= bound(i), |Delta_i'(t)| <= rate_bound(i) for all t.
  const Eigen::VectorXd& bounds() const noexcept { return bound_; }
  const Eigen::VectorXd& rate_bounds() const noexcept { return rate_bound_; }

 private:
  Kind kind_ = Kind::kNone;
  Eigen::MatrixXd levels_;  // constant: N x 1; sinusoid: amplitude column; steps: N x K
  Eigen::VectorXd omega_;
  Eigen::VectorXd phase_;
  double period_ = 1.0;
  double ramp_ = 1.0;
  Eigen::VectorXd bound_;
  Eigen::VectorXd rate_bound_;
};

double corrupt_measurement(double x, double delta) noexcept;

double corrective_v(int i, const Eigen::VectorXd& delta_hat, const Graph& g,
                    const ActivationMatrices& act, const NetworkParams& params,
                    EstimatorLaw law = EstimatorLaw::kConsistent);

double corrective_w(int i, const Eigen::VectorXd& delta_hat, const Graph& g, double gamma);

/// Nominal controller evaluated on corrupted measurements plus v_i.
double adaptive_control(int i, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& delta_hat,
                        const Eigen::VectorXd& p, const Graph& g, const ActivationMatrices& act,
                        const Eigen::VectorXd& c, const NetworkParams& params,
                        EstimatorLaw law = EstimatorLaw::kConsistent);

double adaptive_integral_rate(int i, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& delta_hat,
                              const Eigen::VectorXd& p, const Graph& g, const NetworkParams& params);

/// Projected (or, in constant mode, plain) gradient step on delta_hat_i.
double uncertainty_update_rate(double e_x_i, double delta_hat_i, const AdaptiveParams& adaptive,
                               double a, double lo, double hi, double nu);

double state_estimate_rate(int i, const Eigen::VectorXd& x_tilde, const AdaptiveState& est,
                           const Graph& g, const ActivationMatrices& act, const Eigen::VectorXd& c,
                           const NetworkParams& params, const AdaptiveParams& adaptive);

double integral_estimate_rate(int i, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& p_hat,
                              const Eigen::VectorXd& delta_hat, const Graph& g,
                              const NetworkParams& params,
                              EstimatorLaw law = EstimatorLaw::kConsistent);

}  // namespace apnet
