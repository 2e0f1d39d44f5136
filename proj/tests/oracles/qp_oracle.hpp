#pragma once

#include <limits>

#include <Eigen/Dense>

namespace apnet::oracle {

struct QpSolution {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  double r = 0.0;
  double objective = 0.0;
};

/// min |U|^2 + r^2  s.t.  a.U + r >= b, solved by enumerating the two
/// active sets and solving the KKT system of the active one with LU.
inline QpSolution min_norm_qp(const Eigen::Vector2d& a, double b) {
  QpSolution best;
  double best_obj = std::numeric_limits<double>::infinity();

  // Inactive constraint: unconstrained minimizer z = 0.
  if (0.0 >= b) {
    best_obj = 0.0;
  }

  // Active constraint: [2I  -g; -g^T 0] [z; lambda] = [0; -b], g = (a, 1).
  Eigen::Vector3d g(a.x(), a.y(), 1.0);
  Eigen::Matrix4d kkt = Eigen::Matrix4d::Zero();
  kkt.topLeftCorner<3, 3>() = 2.0 * Eigen::Matrix3d::Identity();
  kkt.block<3, 1>(0, 3) = -g;
  kkt.block<1, 3>(3, 0) = -g.transpose();
  Eigen::Vector4d rhs(0.0, 0.0, 0.0, -b);
  const Eigen::Vector4d sol = kkt.partialPivLu().solve(rhs);
  const Eigen::Vector3d z = sol.head<3>();
  const double lambda = sol(3);
  if (lambda >= -1e-14 && g.dot(z) >= b - 1e-12) {
    const double obj = z.squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best.u = z.head<2>();
      best.r = z(2);
    }
  }
  best.objective = best_obj;
  if (best_obj == 0.0) {
    best.u.setZero();
    best.r = 0.0;
  }
  return best;
}

}  // namespace apnet::oracle
