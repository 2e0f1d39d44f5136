#include "apnet/projection.hpp"

#include <algorithm>
#include <string>

#include "apnet/errors.hpp"

namespace apnet {

ProjectionBounds ProjectionBounds::symmetric(Eigen::Index n, double bound, double nu_fraction) {
  ProjectionBounds b;
  b.theta_min = Eigen::VectorXd::Constant(n, -bound);
  b.theta_max = Eigen::VectorXd::Constant(n, bound);
  b.nu = Eigen::VectorXd::Constant(n, nu_fraction * 2.0 * bound);
  b.validate();
  return b;
}

void ProjectionBounds::validate() const {
  if (theta_max.size() != theta_min.size() || nu.size() != theta_min.size()) {
    fail(ErrorKind::kDimensionMismatch, "projection bounds have inconsistent lengths");
  }
  for (Eigen::Index i = 0; i < theta_min.size(); ++i) {
    if (!(nu(i) > 0.0)) fail(ErrorKind::kInvalidConfig, "projection nu must be positive");
    if (!(theta_min(i) + 2.0 * nu(i) < theta_max(i))) {
      fail(ErrorKind::kInvalidConfig,
           "inner hypercube empty at component " + std::to_string(i));
    }
  }
}

bool ProjectionBounds::inside(const Eigen::VectorXd& theta, double tol) const {
  return ((theta.array() >= theta_min.array() - tol) && (theta.array() <= theta_max.array() + tol)).all();
}

bool ProjectionBounds::inside_inner(const Eigen::VectorXd& theta) const {
  return ((theta.array() >= (theta_min + nu).array()) && (theta.array() <= (theta_max - nu).array())).all();
}

Eigen::VectorXd ProjectionBounds::clamp(const Eigen::VectorXd& theta) const {
  return theta.cwiseMax(theta_min).cwiseMin(theta_max);
}

double proj_component(double theta, double y, double lo, double hi, double nu) noexcept {
  theta = std::clamp(theta, lo, hi);
  if (theta > hi - nu && y > 0.0) return ((hi - theta) / nu) * y;
  if (theta < lo + nu && y < 0.0) return ((theta - lo) / nu) * y;
  return y;
}

Eigen::VectorXd proj(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                     const ProjectionBounds& bounds) {
  if (theta.size() != y.size() || theta.size() != bounds.size()) {
    fail(ErrorKind::kDimensionMismatch, "proj operands differ in length");
  }
  Eigen::VectorXd out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    out(i) = proj_component(theta(i), y(i), bounds.theta_min(i), bounds.theta_max(i), bounds.nu(i));
  }
  return out;
}

Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& y,
                            const ProjectionBounds& bounds) {
  if (theta.rows() != y.rows() || theta.cols() != y.cols() || theta.rows() != bounds.size()) {
    fail(ErrorKind::kDimensionMismatch, "proj_matrix operands differ in shape");
  }
  Eigen::MatrixXd out(theta.rows(), theta.cols());
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    out.col(j) = proj(theta.col(j), y.col(j), bounds);
  }
  return out;
}

}  // namespace apnet
