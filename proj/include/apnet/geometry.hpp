#pragma once

#include <vector>

#include <Eigen/Dense>

namespace apnet {

using Point2 = Eigen::Vector2d;

/// Counter-clockwise vertex list of a convex polygon.
using Polygon = std::vector<Point2>;

struct Rect {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  double width() const noexcept { return x_hi - x_lo; }
  double height() const noexcept { return y_hi - y_lo; }
  double area() const noexcept { return width() * height(); }
  bool contains(const Point2& p, double tol = 0.0) const noexcept {
    return p.x() >= x_lo - tol && p.x() <= x_hi + tol && p.y() >= y_lo - tol && p.y() <= y_hi + tol;
  }
  Point2 clamp(const Point2& p) const noexcept;
  Polygon polygon() const;
};

/// Area, first moment and polar second moment about the origin:
/// integrals of 1, q and |q|^2 over the polygon.
struct PolygonMoments {
  double area = 0.0;
  Point2 first = Point2::Zero();
  double second = 0.0;
};

PolygonMoments polygon_moments(const Polygon& poly);
double polygon_area(const Polygon& poly);
/// Vertex average for degenerate (zero-area) input.
Point2 polygon_centroid(const Polygon& poly);

/// Keeps the part of `poly` with normal . p <= offset. When `labels` is
/// given, labels[k] tags edge k (vertex k to k+1) and new edges created on
/// the cut line get `cut_label`.
Polygon clip_halfplane(const Polygon& poly, const Point2& normal, double offset,
                       std::vector<int>* labels = nullptr, int cut_label = -1);

/// Point-in-convex-polygon test with a signed tolerance on each edge.
bool convex_contains(const Polygon& poly, const Point2& p, double tol = 1e-12);

}  // namespace apnet
