#include "apnet/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "apnet/errors.hpp"

namespace apnet {

EstimatorLaw parse_estimator_law(std::string_view name) {
  if (name == "consistent") return EstimatorLaw::kConsistent;
  if (name == "literal") return EstimatorLaw::kLiteral;
  fail(ErrorKind::kInvalidConfig, "unknown estimator_law '" + std::string(name) + "'");
}

std::string_view to_string(EstimatorLaw law) {
  return law == EstimatorLaw::kLiteral ? "literal" : "consistent";
}

void AdaptiveParams::validate() const {
  if (!(gamma_rate > 0.0)) fail(ErrorKind::kInvalidConfig, "adaptive.gamma_rate must be positive");
  if (!(mu > 0.0)) fail(ErrorKind::kInvalidConfig, "adaptive.mu must be positive");
  if (!(delta_hat_max > 0.0)) fail(ErrorKind::kInvalidConfig, "adaptive.delta_hat_max must be positive");
  if (!(nu_fraction > 0.0) || !(nu_fraction < 0.5)) {
    fail(ErrorKind::kInvalidConfig, "adaptive.nu_fraction must lie in (0, 0.5)");
  }
}

// ---------------------------------------------------------------------------
// UncertaintyModel

UncertaintyModel UncertaintyModel::none(int node_count) {
  UncertaintyModel m;
  m.kind_ = Kind::kNone;
  m.levels_ = Eigen::MatrixXd::Zero(node_count, 1);
  m.bound_ = Eigen::VectorXd::Zero(node_count);
  m.rate_bound_ = Eigen::VectorXd::Zero(node_count);
  return m;
}

UncertaintyModel UncertaintyModel::constant(Eigen::VectorXd values) {
  UncertaintyModel m;
  m.kind_ = Kind::kConstant;
  m.bound_ = values.cwiseAbs();
  m.rate_bound_ = Eigen::VectorXd::Zero(values.size());
  m.levels_ = std::move(values);
  return m;
}

UncertaintyModel UncertaintyModel::sinusoidal(Eigen::VectorXd amplitude, Eigen::VectorXd omega,
                                              Eigen::VectorXd phase) {
  if (omega.size() != amplitude.size() || phase.size() != amplitude.size()) {
    fail(ErrorKind::kDimensionMismatch, "sinusoidal uncertainty parameter lengths differ");
  }
  UncertaintyModel m;
  m.kind_ = Kind::kSinusoidal;
  m.bound_ = amplitude.cwiseAbs();
  m.rate_bound_ = amplitude.cwiseAbs().cwiseProduct(omega.cwiseAbs());
  m.levels_ = std::move(amplitude);
  m.omega_ = std::move(omega);
  m.phase_ = std::move(phase);
  return m;
}

UncertaintyModel UncertaintyModel::smoothed_steps(Eigen::MatrixXd levels, double period, double ramp) {
  if (levels.cols() < 1) fail(ErrorKind::kInvalidConfig, "smoothed steps need at least one level");
  if (!(period > 0.0) || !(ramp > 0.0) || ramp > period) {
    fail(ErrorKind::kInvalidConfig, "smoothed steps need 0 < ramp <= period");
  }
  UncertaintyModel m;
  m.kind_ = Kind::kSmoothedSteps;
  m.period_ = period;
  m.ramp_ = ramp;
  m.bound_ = levels.cwiseAbs().rowwise().maxCoeff();
  m.rate_bound_ = Eigen::VectorXd::Zero(levels.rows());
  for (Eigen::Index k = 1; k < levels.cols(); ++k) {
    const Eigen::VectorXd jump = (levels.col(k) - levels.col(k - 1)).cwiseAbs();
    m.rate_bound_ = m.rate_bound_.cwiseMax(1.5 * jump / ramp);
  }
  m.levels_ = std::move(levels);
  return m;
}

double UncertaintyModel::value(int i, double t) const {
  switch (kind_) {
    case Kind::kNone: return 0.0;
    case Kind::kConstant: return levels_(i, 0);
    case Kind::kSinusoidal: return levels_(i, 0) * std::sin(omega_(i) * t + phase_(i));
    case Kind::kSmoothedSteps: {
      const auto last = levels_.cols() - 1;
      const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::max(0.0, std::floor(t / period_))), last);
      const double into = t - static_cast<double>(k) * period_;
      if (k == 0 || into >= ramp_) return levels_(i, k);
      const double tau = into / ramp_;
      const double s = tau * tau * (3.0 - 2.0 * tau);
      return levels_(i, k - 1) + s * (levels_(i, k) - levels_(i, k - 1));
    }
  }
  return 0.0;
}

double UncertaintyModel::rate(int i, double t) const {
  switch (kind_) {
    case Kind::kNone:
    case Kind::kConstant: return 0.0;
    case Kind::kSinusoidal: return levels_(i, 0) * omega_(i) * std::cos(omega_(i) * t + phase_(i));
    case Kind::kSmoothedSteps: {
      const auto last = levels_.cols() - 1;
      const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::max(0.0, std::floor(t / period_))), last);
      const double into = t - static_cast<double>(k) * period_;
      if (k == 0 || into >= ramp_ || t < 0.0) return 0.0;
      const double tau = into / ramp_;
      return (levels_(i, k) - levels_(i, k - 1)) * 6.0 * tau * (1.0 - tau) / ramp_;
    }
  }
  return 0.0;
}

Eigen::VectorXd UncertaintyModel::values(double t) const {
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out(i) = value(i, t);
  return out;
}

Eigen::VectorXd UncertaintyModel::rates(double t) const {
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out(i) = rate(i, t);
  return out;
}

// ---------------------------------------------------------------------------
// Per-agent laws

double corrupt_measurement(double x, double delta) noexcept { return x + delta; }

double corrective_v(int i, const Eigen::VectorXd& delta_hat, const Graph& g,
                    const ActivationMatrices& act, const NetworkParams& params, EstimatorLaw law) {
  const double dh = delta_hat(i);
  const double sensed = act.k1(i) * dh;
  const double sign = law == EstimatorLaw::kLiteral ? -1.0 : 1.0;
  return params.k0 * dh + params.alpha * (g.laplacian_row(i, delta_hat) + params.beta(i) * dh) +
         sign * params.alpha * sensed;
}

double corrective_w(int i, const Eigen::VectorXd& delta_hat, const Graph& g, double gamma) {
  return gamma * g.laplacian_row(i, delta_hat);
}

double adaptive_control(int i, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& delta_hat,
                        const Eigen::VectorXd& p, const Graph& g, const ActivationMatrices& act,
                        const Eigen::VectorXd& c, const NetworkParams& params, EstimatorLaw law) {
  return nominal_control(i, x_tilde, p, g, act, c, params) +
         corrective_v(i, delta_hat, g, act, params, law);
}

double adaptive_integral_rate(int i, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& delta_hat,
                              const Eigen::VectorXd& p, const Graph& g, const NetworkParams& params) {
  return integral_rate(i, x_tilde, p, g, params) + corrective_w(i, delta_hat, g, params.gamma);
}

double uncertainty_update_rate(double e_x_i, double delta_hat_i, const AdaptiveParams& adaptive,
                               double a, double lo, double hi, double nu) {
  const double drive = -a * e_x_i;
  if (adaptive.constant_mode) return adaptive.gamma_rate * drive;
  return adaptive.gamma_rate * proj_component(delta_hat_i, drive, lo, hi, nu);
}

double state_estimate_rate(int i, const Eigen::VectorXd& x_tilde, const AdaptiveState& est,
                           const Graph& g, const ActivationMatrices& act, const Eigen::VectorXd& c,
                           const NetworkParams& params, const AdaptiveParams& adaptive) {
  const double xh = est.x_hat(i);
  const double coupling = g.laplacian_row(i, est.x_hat) + params.beta(i) * xh;
  const double sensed = act.k1(i) * xh - act.k2.row(i).dot(c);
  const double innovation = x_tilde(i) - xh - est.delta_hat(i);
  return params.a0() * xh - params.alpha * coupling + est.p_hat(i) - params.alpha * sensed +
         (adaptive.gamma_rate * params.a + adaptive.mu) * innovation;
}

double integral_estimate_rate(int i, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& p_hat,
                              const Eigen::VectorXd& delta_hat, const Graph& g,
                              const NetworkParams& params, EstimatorLaw law) {
  double rate = -params.gamma * (g.laplacian_row(i, x_hat) + params.sigma * p_hat(i));
  if (law == EstimatorLaw::kLiteral) rate += params.gamma * g.laplacian_row(i, delta_hat);
  return rate;
}

}  // namespace apnet
