#include <doctest.h>

#include <cmath>

#include "apnet/errors.hpp"
#include "apnet/projection.hpp"
#include "apnet/rng.hpp"

using namespace apnet;

namespace {

// Oracle: the boundary-layer formula written out per branch.
double reference_proj(double theta, double y, double lo, double hi, double nu) {
  if (theta > hi - nu && y > 0.0) return (hi - theta) / nu * y;
  if (theta < lo + nu && y < 0.0) return (theta - lo) / nu * y;
  return y;
}

}  // namespace

TEST_CASE("interior theta passes y through") {
  const auto b = ProjectionBounds::symmetric(3, 2.0);
  Eigen::Vector3d theta(0.0, 1.5, -1.7);
  Eigen::Vector3d y(5.0, -3.0, 2.0);
  REQUIRE(b.inside_inner(theta));
  CHECK(proj(theta, y, b) == y);
}

TEST_CASE("boundary cases") {
  const double nu = 0.2;
  CHECK(proj_component(1.0, 3.0, -1.0, 1.0, nu) == 0.0);
  CHECK(proj_component(1.0 - nu / 2.0, 2.0, -1.0, 1.0, nu) == doctest::Approx(1.0));
  CHECK(proj_component(-1.0, -4.0, -1.0, 1.0, nu) == 0.0);
  // Inward drive is never scaled.
  CHECK(proj_component(1.0, -3.0, -1.0, 1.0, nu) == -3.0);
  // Entry clamp for slight numerical exits.
  CHECK(proj_component(1.0 + 1e-13, 3.0, -1.0, 1.0, nu) == 0.0);
}

TEST_CASE("symmetric bounds use nu as a fraction of the width") {
  const auto b = ProjectionBounds::symmetric(2, 6.0, 0.05);
  CHECK(b.nu(0) == doctest::Approx(0.6));
  CHECK_THROWS_AS(ProjectionBounds::symmetric(1, 1.0, 0.6), Error);
}

TEST_CASE("dimension mismatch") {
  const auto b = ProjectionBounds::symmetric(2, 1.0);
  CHECK_THROWS_AS(proj(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), b), Error);
  CHECK_THROWS_AS(proj_matrix(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 3), b), Error);
}

TEST_CASE("projection inequality on random samples") {
  Rng rng(1);
  const int n = 4;
  for (int trial = 0; trial < 1000; ++trial) {
    ProjectionBounds b;
    b.theta_min.resize(n);
    b.theta_max.resize(n);
    b.nu.resize(n);
    for (int i = 0; i < n; ++i) {
      b.theta_min(i) = rng.uniform(-5.0, 0.0);
      b.theta_max(i) = b.theta_min(i) + rng.uniform(0.5, 5.0);
      b.nu(i) = rng.uniform(0.01, 0.45) * (b.theta_max(i) - b.theta_min(i));
    }
    b.validate();
    Eigen::VectorXd theta(n), star(n), y(n);
    for (int i = 0; i < n; ++i) {
      // Bias a third of the samples into the boundary layers.
      const double u = rng.unit();
      if (u < 0.33) {
        theta(i) = b.theta_max(i) - rng.unit() * b.nu(i);
      } else if (u < 0.66) {
        theta(i) = b.theta_min(i) + rng.unit() * b.nu(i);
      } else {
        theta(i) = rng.uniform(b.theta_min(i), b.theta_max(i));
      }
      star(i) = rng.uniform(b.theta_min(i) + b.nu(i), b.theta_max(i) - b.nu(i));
      y(i) = rng.uniform(-10.0, 10.0);
    }
    const Eigen::VectorXd p = proj(theta, y, b);
    CHECK((theta - star).dot(p - y) <= 1e-12);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(p(i)) <= std::abs(y(i)));
      CHECK(p(i) == reference_proj(theta(i), y(i), b.theta_min(i), b.theta_max(i), b.nu(i)));
    }
  }
}

TEST_CASE("forward invariance under explicit integration") {
  Rng rng(2);
  const auto b = ProjectionBounds::symmetric(3, 1.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  const double dt = 1e-4;
  Eigen::VectorXd y(3);
  double worst_exit = 0.0;
  for (int step = 0; step < 200000; ++step) {
    if (step % 5000 == 0) {
      for (int i = 0; i < 3; ++i) y(i) = rng.uniform(-8.0, 8.0);
    }
    theta += dt * proj(theta, y, b);
    const double exit = ((theta - b.theta_max).cwiseMax(b.theta_min - theta)).maxCoeff();
    worst_exit = std::max(worst_exit, exit);
    theta = b.clamp(theta);
    REQUIRE(b.inside(theta));
  }
  CHECK(worst_exit < 1e-6);
}

TEST_CASE("continuity at the boundary-layer edges") {
  const double lo = -1.0, hi = 1.0, nu = 0.1;
  for (double y : {-2.0, -0.5, 0.5, 2.0}) {
    for (double edge : {hi - nu, lo + nu, hi, lo}) {
      for (double h : {1e-6, 1e-9}) {
        const double left = proj_component(edge - h, y, lo, hi, nu);
        const double right = proj_component(edge + h, y, lo, hi, nu);
        CHECK(std::abs(left - right) <= 2.0 * std::abs(y) * h / nu + 1e-15);
      }
    }
    for (double th : {hi - nu / 2, lo + nu / 2}) {
      CHECK(std::abs(proj_component(th, 1e-9, lo, hi, nu) - proj_component(th, -1e-9, lo, hi, nu)) < 3e-9);
    }
  }
}

TEST_CASE("proj_matrix is columnwise proj") {
  const auto b = ProjectionBounds::symmetric(3, 1.0);
  Eigen::MatrixXd theta(3, 3), y(3, 3);
  theta << 0.0, 1.0, 0.95, 0.0, 1.0, -0.99, 0.0, 1.0, 0.2;
  y << 1, 2, 3, -1, 4, -5, 2, 1, 1;
  const Eigen::MatrixXd out = proj_matrix(theta, y, b);
  CHECK(out.col(0) == y.col(0));
  CHECK(out.col(1).isZero());
  for (int j = 0; j < 3; ++j) {
    CHECK(out.col(j) == proj(theta.col(j), y.col(j), b));
  }
}
