#include "apnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apnet/errors.hpp"

namespace apnet {

namespace {

double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

NominalBound theorem1_bound(const NetworkParams& p, const Graph& g, const NominalBoundInputs& in) {
  const int n = g.node_count();
  const Eigen::MatrixXd f = g.laplacian() + Eigen::MatrixXd(p.beta.asDiagonal());
  NominalBound out;
  out.lambda_min_f = lambda_min(f);
  if (!(out.lambda_min_f > 0.0)) fail(ErrorKind::kInvalidSpectrum, "lambda_min(L + beta) is not positive");
  out.beta_norm = p.beta.cwiseAbs().maxCoeff();
  const double b = out.beta_norm, a = p.alpha, eps = in.epsilon_bar, cd = in.c_bar_d;
  const double num = eps * b * (a * a * b + 2.0 * n * a * cd) + n * n * cd * cd + std::abs(p.a0()) * n * eps;
  out.first_term = num / (a * a * out.lambda_min_f * out.lambda_min_f);
  const double forcing = p.gamma * p.sigma * in.p1_bar + in.p2_bar;
  out.second_term = a * a / (std::pow(p.gamma, 3) * p.sigma * p.sigma) * forcing * forcing;
  out.bound = out.first_term + out.second_term;
  return out;
}

AdaptiveBounds theorem2_bounds(const AdaptiveParams& ad, const NetworkParams& p, const Graph& g, double delta_bar,
                               double delta_bar_d) {
  const int n = g.node_count();
  const Eigen::MatrixXd f = g.laplacian() + Eigen::MatrixXd(p.beta.asDiagonal());
  const Eigen::MatrixXd h = p.alpha * f - p.a0() * Eigen::MatrixXd::Identity(n, n);
  AdaptiveBounds b;
  b.alpha1 = lambda_min(h + ad.mu * Eigen::MatrixXd::Identity(n, n));
  if (!(b.alpha1 > 0.0)) fail(ErrorKind::kInvalidSpectrum, "lambda_min(H + mu I) is not positive");
  b.alpha0 = std::min(b.alpha1, p.sigma);
  b.alpha2 = delta_bar_d;
  b.delta_bar = delta_bar;
  b.eta2 = delta_bar + ad.delta_hat_max;
  const double gi = 1.0 / ad.gamma_rate;
  const double r = b.alpha2 / (2.0 * b.alpha0);
  b.eta1 = r + std::sqrt(r * r + 2.0 * gi * b.alpha2 * b.eta2 / b.alpha0);
  b.gamma0 = 0.5 * std::min(1.0, 1.0 / p.gamma);
  b.gamma1 = 0.5 * std::max(1.0, 1.0 / p.gamma);
  b.e_x = std::sqrt(b.gamma1 / b.gamma0 * b.eta1 * b.eta1 + gi / b.gamma0 * b.eta2 * b.eta2);
  b.e_z = b.e_x;
  b.delta_tilde = std::sqrt(b.gamma1 * ad.gamma_rate * b.eta1 * b.eta1 + b.eta2 * b.eta2);
  b.lyapunov_level = b.gamma1 * b.eta1 * b.eta1 + gi * b.eta2 * b.eta2;
  return b;
}

AdaptiveBounds theorem2_bounds(const AdaptiveParams& ad, const NetworkParams& p, const Graph& g,
                               const UncertaintyModel& model) {
  return theorem2_bounds(ad, p, g, model.bounds().norm(), model.rate_bounds().norm());
}

double lyapunov_value(const Eigen::VectorXd& e_x, const Eigen::VectorXd& e_z, const Eigen::VectorXd& dtilde,
                      double gamma, double gamma_rate) {
  return 0.5 * e_x.squaredNorm() + e_z.squaredNorm() / (2.0 * gamma) + dtilde.squaredNorm() / gamma_rate;
}

std::vector<double> finite_difference(std::span<const double> t, std::span<const double> v) {
  if (t.size() != v.size()) fail(ErrorKind::kDimensionMismatch, "time and value series differ in length");
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (v[1] - v[0]) / (t[1] - t[0]);
  d[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (t[k + 1] - t[k - 1]);
  return d;
}

LyapunovSeries lyapunov_series(std::span<const double> t, std::span<const double> v) {
  LyapunovSeries s;
  s.t.assign(t.begin(), t.end());
  s.v.assign(v.begin(), v.end());
  s.v_dot = finite_difference(t, v);
  return s;
}

std::optional<double> transient_cutoff(std::span<const double> t, std::span<const double> values, double level,
                                       double hold) {
  if (t.size() != values.size()) fail(ErrorKind::kDimensionMismatch, "time and value series differ in length");
  std::optional<std::size_t> start;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] <= level) {
      if (!start) start = k;
      if (t[k] - t[*start] >= hold) return t[*start];
    } else {
      start.reset();
    }
  }
  return std::nullopt;
}

double max_after(std::span<const double> t, std::span<const double> values, double from) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (t[k] >= from) m = std::max(m, values[k]);
  }
  return m;
}

}  // namespace apnet
