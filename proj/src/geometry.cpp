#include "apnet/geometry.hpp"

#include <algorithm>

namespace apnet {

namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

Point2 Rect::clamp(const Point2& p) const noexcept {
  return {std::clamp(p.x(), x_lo, x_hi), std::clamp(p.y(), y_lo, y_hi)};
}

Polygon Rect::polygon() const {
  return {{x_lo, y_lo}, {x_hi, y_lo}, {x_hi, y_hi}, {x_lo, y_hi}};
}

PolygonMoments polygon_moments(const Polygon& poly) {
  PolygonMoments m;
  const std::size_t n = poly.size();
  if (n < 3) return m;
  double a2 = 0.0, cx = 0.0, cy = 0.0, ixx = 0.0, iyy = 0.0;
  // Shift to the first vertex for conditioning, translate back at the end.
  const Point2 o = poly[0];
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 p = poly[k] - o;
    const Point2 q = poly[(k + 1) % n] - o;
    const double w = cross(p, q);
    a2 += w;
    cx += (p.x() + q.x()) * w;
    cy += (p.y() + q.y()) * w;
    ixx += (p.x() * p.x() + p.x() * q.x() + q.x() * q.x()) * w;
    iyy += (p.y() * p.y() + p.y() * q.y() + q.y() * q.y()) * w;
  }
  const double area = 0.5 * a2;
  if (area == 0.0) return m;
  // Moments in the shifted frame.
  const Point2 first_local(cx / 6.0, cy / 6.0);
  const double second_local = (ixx + iyy) / 12.0;
  m.area = area;
  m.first = first_local + area * o;
  // |q+o|^2 = |q|^2 + 2 q.o + |o|^2
  m.second = second_local + 2.0 * first_local.dot(o) + area * o.squaredNorm();
  return m;
}

double polygon_area(const Polygon& poly) { return polygon_moments(poly).area; }

Point2 polygon_centroid(const Polygon& poly) {
  const PolygonMoments m = polygon_moments(poly);
  if (m.area > 0.0) return m.first / m.area;
  Point2 avg = Point2::Zero();
  for (const Point2& p : poly) avg += p;
  return poly.empty() ? avg : Point2(avg / static_cast<double>(poly.size()));
}

Polygon clip_halfplane(const Polygon& poly, const Point2& normal, double offset,
                       std::vector<int>* labels, int cut_label) {
  Polygon out;
  std::vector<int> out_labels;
  const std::size_t n = poly.size();
  if (n == 0) {
    if (labels) labels->clear();
    return out;
  }
  out.reserve(n + 2);
  for (std::size_t k = 0; k < n; ++k) {
    const Point2& p = poly[k];
    const Point2& q = poly[(k + 1) % n];
    const int label = labels ? (*labels)[k] : -1;
    const double sp = normal.dot(p) - offset;
    const double sq = normal.dot(q) - offset;
    const bool p_in = sp <= 0.0;
    const bool q_in = sq <= 0.0;
    if (p_in) {
      out.push_back(p);
      out_labels.push_back(label);
      if (!q_in) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
        out_labels.push_back(cut_label);
      }
    } else if (q_in) {
      const double t = sp / (sp - sq);
      out.push_back(p + t * (q - p));
      out_labels.push_back(label);
    }
  }
  if (labels) *labels = std::move(out_labels);
  return out;
}

bool convex_contains(const Polygon& poly, const Point2& p, double tol) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 e = poly[(k + 1) % n] - poly[k];
    if (cross(e, p - poly[k]) < -tol * std::max(1.0, e.norm())) return false;
  }
  return true;
}

}  // namespace apnet
