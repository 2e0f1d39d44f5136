#include <doctest.h>

#include <cmath>
#include <vector>

#include "apnet/adaptive.hpp"
#include "apnet/errors.hpp"
#include "support.hpp"

using namespace apnet;
using apnet::testing::path_graph;
using apnet::testing::random_connected_graph;
using apnet::testing::random_vector;

namespace {

NetworkParams two_node_params() {
  NetworkParams p;
  p.a = -1.0;
  p.k0 = 1.0;
  p.alpha = 1.0;
  p.gamma = 1.0;
  p.sigma = 1.0;
  p.beta = Eigen::Vector2d(1.0, 0.0);
  p.sensing_radius = 1.0;
  return p;
}

}  // namespace

TEST_CASE("corrupted measurement") {
  CHECK(corrupt_measurement(2.0, 0.0) == 2.0);
  CHECK(corrupt_measurement(2.0, 0.5) == 2.5);
}

TEST_CASE("corrective v") {
  const Graph g = path_graph(2);
  const NetworkParams p = two_node_params();
  auto passive = ActivationMatrices::passive(2);
  CHECK(corrective_v(0, Eigen::Vector2d::Zero(), g, passive, p) == 0.0);
  const Eigen::Vector2d dh(1.0, 0.0);
  CHECK(corrective_v(0, dh, g, passive, p, EstimatorLaw::kLiteral) == 3.0);
  CHECK(corrective_v(0, dh, g, passive, p, EstimatorLaw::kConsistent) == 3.0);
  ActivationMatrices active = passive;
  active.k2(0, 0) = 1.0;
  active.k1(0) = 1.0;
  CHECK(corrective_v(0, dh, g, active, p, EstimatorLaw::kLiteral) == 2.0);
  CHECK(corrective_v(0, dh, g, active, p, EstimatorLaw::kConsistent) == 4.0);
}

TEST_CASE("corrective w") {
  const Graph g = path_graph(2);
  CHECK(corrective_w(0, Eigen::Vector2d(3, 3), g, 2.0) == 0.0);
  CHECK(corrective_w(0, Eigen::Vector2d(1, 0), g, 2.0) == 2.0);
  CHECK(corrective_w(1, Eigen::Vector2d(1, 0), g, 2.0) == -2.0);
  Rng rng(8);
  const Graph r = random_connected_graph(rng, 12, 0.2);
  const Eigen::VectorXd dh = random_vector(rng, 12);
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) sum += corrective_w(i, dh, r, 1.7);
  CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("adaptive control cancels the corruption when the estimate is exact") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + static_cast<int>(rng.unit() * 8);
    const Graph g = random_connected_graph(rng, n, 0.25);
    NetworkParams p;
    p.a = 1.0;
    p.k0 = rng.uniform(1.0, 3.0);
    p.alpha = rng.uniform(0.5, 10.0);
    p.gamma = rng.uniform(0.5, 10.0);
    p.sigma = rng.uniform(0.01, 1.0);
    p.beta = random_vector(rng, n, 0.0, 1.0);
    p.sensing_radius = 4.0;
    std::vector<Point2> agents;
    for (int i = 0; i < n; ++i) agents.emplace_back(rng.uniform(0, 10), rng.uniform(0, 10));
    const std::vector<Point2> inputs{{rng.uniform(0, 10), rng.uniform(0, 10)}, {5, 5}};
    const auto act = activation_matrices(agents, inputs, p.sensing_radius);
    const std::vector<double> cv{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Eigen::VectorXd c = pad_inputs(cv, n);
    const Eigen::VectorXd x = random_vector(rng, n, -3, 3);
    const Eigen::VectorXd pi = random_vector(rng, n, -3, 3);
    const Eigen::VectorXd delta = random_vector(rng, n, 0, 5);
    const Eigen::VectorXd xt = x + delta;
    for (int i = 0; i < n; ++i) {
      const double u_nom = nominal_control(i, x, pi, g, act, c, p);
      const double u_ad = adaptive_control(i, xt, delta, pi, g, act, c, p);
      CHECK(std::abs(u_ad - u_nom) < 1e-10);
      const double pd = integral_rate(i, x, pi, g, p);
      CHECK(std::abs(adaptive_integral_rate(i, xt, delta, pi, g, p) - pd) < 1e-10);

      // Without correction the difference is the printed corruption term.
      const double u_raw = adaptive_control(i, xt, Eigen::VectorXd::Zero(n), pi, g, act, c, p);
      const double expected = -p.k0 * delta(i) - p.alpha * (g.laplacian_row(i, delta) + p.beta(i) * delta(i)) -
                              p.alpha * act.k1(i) * delta(i);
      CHECK(std::abs((u_raw - u_nom) - expected) < 1e-10);
    }
  }
}

TEST_CASE("literal law cancels only for passive agents") {
  const Graph g = path_graph(3);
  NetworkParams p;
  p.a = 1.0;
  p.k0 = 1.0;
  p.beta = Eigen::Vector3d(0.1, 0.1, 0.1);
  const Eigen::Vector3d x(1, 2, 3), pi(0, 0, 0), delta(1, 1, 1);
  const auto passive = ActivationMatrices::passive(3);
  const Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int i = 0; i < 3; ++i) {
    CHECK(adaptive_control(i, x + delta, delta, pi, g, passive, c, p, EstimatorLaw::kLiteral) ==
          doctest::Approx(nominal_control(i, x, pi, g, passive, c, p)));
  }
  ActivationMatrices act = passive;
  act.k1(0) = 1.0;
  act.k2(0, 0) = 1.0;
  const double u_lit = adaptive_control(0, x + delta, delta, pi, g, act, c, p, EstimatorLaw::kLiteral);
  CHECK(u_lit - nominal_control(0, x, pi, g, act, c, p) == doctest::Approx(-2.0 * p.alpha));
}

TEST_CASE("adaptive integral rate example") {
  const Graph g = path_graph(2);
  NetworkParams p = two_node_params();
  CHECK(adaptive_integral_rate(0, Eigen::Vector2d(1, 0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), g, p) ==
        -1.0);
  CHECK(adaptive_integral_rate(0, Eigen::Vector2d(2, 2), Eigen::Vector2d(1, 1), Eigen::Vector2d::Zero(), g, p) ==
        0.0);
}

TEST_CASE("uncertainty update") {
  AdaptiveParams ap;
  ap.gamma_rate = 5.0;
  ap.delta_hat_max = 6.0;
  const auto b = ap.bounds(1);
  const double lo = b.theta_min(0), hi = b.theta_max(0), nu = b.nu(0);
  CHECK(uncertainty_update_rate(0.0, 1.0, ap, 1.0, lo, hi, nu) == 0.0);
  CHECK(uncertainty_update_rate(0.5, 0.0, ap, 1.0, lo, hi, nu) == -2.5);
  CHECK(uncertainty_update_rate(-0.5, 6.0, ap, 1.0, lo, hi, nu) == 0.0);
  CHECK(uncertainty_update_rate(0.5, 6.0, ap, 1.0, lo, hi, nu) == -2.5);
  ap.constant_mode = true;
  CHECK(uncertainty_update_rate(-0.5, 6.0, ap, 1.0, lo, hi, nu) == 2.5);
}

TEST_CASE("state estimate rate") {
  const Graph g = path_graph(2);
  NetworkParams p = two_node_params();
  AdaptiveParams ap;
  ap.gamma_rate = 5.0;
  ap.mu = 1.5;
  const auto passive = ActivationMatrices::passive(2);
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();

  // x_hat = x, delta_hat = delta, consensus, no inputs: a0 * x_hat.
  p.beta.setZero();
  AdaptiveState est{Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(2, 2), zero};
  const Eigen::Vector2d xt = est.x_hat + est.delta_hat;
  CHECK(state_estimate_rate(0, xt, est, g, passive, zero, p, ap) == doctest::Approx(p.a0() * 2.0));

  // Innovation only.
  NetworkParams q = p;
  q.a = 1.0;
  q.k0 = 1.0;
  AdaptiveState e0{zero, zero, zero};
  CHECK(state_estimate_rate(0, Eigen::Vector2d(1, 0), e0, g, passive, zero, q, ap) == doctest::Approx(6.5));

  // Active agent at the input with c = 2 and x_hat = 0.
  ActivationMatrices act = passive;
  act.k1(0) = 1.0;
  act.k2(0, 0) = 1.0;
  AdaptiveParams quiet = ap;
  quiet.gamma_rate = 1e-300;
  quiet.mu = 1e-300;
  CHECK(state_estimate_rate(0, zero, e0, g, act, Eigen::Vector2d(2, 0), q, quiet) == doctest::Approx(2.0));
}

TEST_CASE("integral estimate rate") {
  const Graph g = path_graph(2);
  NetworkParams p = two_node_params();
  const Eigen::Vector2d u(1, 1), zero = Eigen::Vector2d::Zero();
  CHECK(integral_estimate_rate(0, u, zero, u, g, p) == 0.0);
  const Eigen::Vector2d xh(1, 0), dh(1, 0);
  CHECK(integral_estimate_rate(0, xh, zero, dh, g, p, EstimatorLaw::kLiteral) == 0.0);
  CHECK(integral_estimate_rate(0, xh, zero, dh, g, p, EstimatorLaw::kConsistent) == -1.0);
  p.sigma = 0.5;
  CHECK(integral_estimate_rate(0, u, Eigen::Vector2d(2, 0), u, g, p) == -1.0);
}

TEST_CASE("estimator law names") {
  CHECK(parse_estimator_law("literal") == EstimatorLaw::kLiteral);
  CHECK(parse_estimator_law("consistent") == EstimatorLaw::kConsistent);
  CHECK(to_string(EstimatorLaw::kLiteral) == "literal");
  CHECK_THROWS_AS(parse_estimator_law("paper"), Error);
}

TEST_CASE("uncertainty models respect their declared bounds") {
  Rng rng(21);
  const int n = 5;
  std::vector<UncertaintyModel> models;
  models.push_back(UncertaintyModel::none(n));
  models.push_back(UncertaintyModel::constant(random_vector(rng, n, 0, 5)));
  models.push_back(UncertaintyModel::sinusoidal(random_vector(rng, n, 0, 2), random_vector(rng, n, 0.1, 2),
                                                random_vector(rng, n, 0, 6)));
  Eigen::MatrixXd levels(n, 4);
  for (int k = 0; k < 4; ++k) levels.col(k) = random_vector(rng, n, -3, 3);
  models.push_back(UncertaintyModel::smoothed_steps(levels, 5.0, 1.0));
  for (const auto& m : models) {
    CHECK(m.size() == n);
    for (int s = 0; s < 4000; ++s) {
      const double t = s * 0.01;
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(m.value(i, t)) <= m.bounds()(i) + 1e-12);
        CHECK(std::abs(m.rate(i, t)) <= m.rate_bounds()(i) + 1e-12);
        // Derivative consistency by central differences.
        const double h = 1e-6;
        const double fd = (m.value(i, t + h) - m.value(i, t - h)) / (2 * h);
        CHECK(std::abs(fd - m.rate(i, t)) < 1e-4 * (1.0 + m.rate_bounds()(i)));
      }
    }
  }
  CHECK(models[3].value(0, 0.0) == levels(0, 0));
  CHECK(models[3].value(0, 7.0) == levels(0, 1));
  CHECK(models[3].value(0, 100.0) == levels(0, 3));
}

TEST_CASE("adaptive parameter validation") {
  AdaptiveParams ap;
  CHECK_NOTHROW(ap.validate());
  ap.mu = 0.0;
  CHECK_THROWS_AS(ap.validate(), Error);
}
