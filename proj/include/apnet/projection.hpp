#pragma once

#include <Eigen/Dense>

namespace apnet {

/// Hypercube Omega = [theta_min, theta_max] with a boundary layer of width
/// nu per component. The inner cube Omega_nu must be nonempty.
struct ProjectionBounds {
  Eigen::VectorXd theta_min;
  Eigen::VectorXd theta_max;
  Eigen::VectorXd nu;

  /// [-bound, +bound]^n with nu = nu_fraction * (theta_max - theta_min).
  static ProjectionBounds symmetric(Eigen::Index n, double bound, double nu_fraction = 0.05);

  Eigen::Index size() const noexcept { return theta_min.size(); }
  /// Throws DimensionMismatch or InvalidConfig.
  void validate() const;
  bool inside(const Eigen::VectorXd& theta, double tol = 0.0) const;
  bool inside_inner(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& theta) const;
};

/// Scalar form of the boundary-layer projection for one component. theta
/// is clamped into [lo, hi] first.
double proj_component(double theta, double y, double lo, double hi, double nu) noexcept;

/// Componentwise projection: scales y_i down linearly to zero across the
/// boundary layer when y_i points outward, leaves it unchanged otherwise.
Eigen::VectorXd proj(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                     const ProjectionBounds& bounds);

/// Column-wise extension: column j of the result is proj(col_j(Theta), col_j(Y)).
Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& y,
                            const ProjectionBounds& bounds);

}  // namespace apnet
