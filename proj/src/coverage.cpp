#include "apnet/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "apnet/errors.hpp"
#include "apnet/network.hpp"

namespace apnet {

namespace {

struct HalfPlane {
  Point2 normal;
  double offset;
};

// Inside of a CCW polygon is left of each edge: n = (e.y, -e.x), n.p <= n.v.
std::vector<HalfPlane> edge_halfplanes(const Polygon& poly) {
  std::vector<HalfPlane> planes;
  const std::size_t n = poly.size();
  planes.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 e = poly[(k + 1) % n] - poly[k];
    if (e.squaredNorm() == 0.0) continue;
    const Point2 normal(e.y(), -e.x());
    planes.push_back({normal, normal.dot(poly[k])});
  }
  return planes;
}

bool inside_all(const std::vector<HalfPlane>& planes, const Point2& p) {
  for (const HalfPlane& h : planes) {
    if (h.normal.dot(p) > h.offset) return false;
  }
  return true;
}

int pixel_floor(double coord, double lo, double step, int count) {
  const int k = static_cast<int>(std::floor((coord - lo) / step));
  return std::clamp(k, 0, count - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain and density

void Domain2D::validate() const {
  if (!(bounds.x_hi > bounds.x_lo) || !(bounds.y_hi > bounds.y_lo)) {
    fail(ErrorKind::kInvalidConfig, "domain bounds must form a nonempty rectangle");
  }
  if (grid_resolution < 16) fail(ErrorKind::kInvalidConfig, "grid_resolution must be at least 16");
}

DensityField DensityField::uniform(const Domain2D& domain, double value) {
  domain.validate();
  DensityField f;
  f.domain = domain;
  f.phi.assign(static_cast<std::size_t>(domain.cell_count()), value);
  return f;
}

double DensityField::total_mass() const {
  double sum = 0.0;
  for (double v : phi) sum += v;
  return sum * domain.cell_area();
}

double DensityField::max_value() const {
  return phi.empty() ? 0.0 : *std::max_element(phi.begin(), phi.end());
}

DensityField density_step(const DensityField& phi, const TargetEstimate& estimate, double dt) {
  DensityField out = phi;
  const double gain = 1.0 / (std::abs(estimate.speed) + 0.1);
  const int res = phi.domain.grid_resolution;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const double d = (phi.domain.grid_point(ix, iy) - estimate.position).norm();
      const double deposit = sensing_kernel(d, phi.bump_radius) * gain;
      double& v = out.at(ix, iy);
      v += dt * deposit - dt * phi.decay * v;
      v = std::clamp(v, 0.0, phi.phi_max);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Voronoi partition

std::vector<Point2> separate_coincident(std::span<const Point2> sites) {
  constexpr double kCoincident = 1e-9;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Point2> out(sites.begin(), sites.end());
  for (const Point2& p : out) {
    if (!p.allFinite()) fail(ErrorKind::kDegenerateSites, "sensor position is not finite");
  }
  double amplitude = 1e-6;
  for (int round = 0; round < 16; ++round) {
    bool clash = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        if ((out[i] - out[j]).norm() < kCoincident) {
          clash = true;
          const double theta = static_cast<double>(j) * golden + round;
          out[j] += amplitude * Point2(std::cos(theta), std::sin(theta));
        }
      }
    }
    if (!clash) return out;
    amplitude *= 2.0;
  }
  fail(ErrorKind::kDegenerateSites, "coincident sensors could not be separated");
}

Polygon voronoi_cell(std::span<const Point2> sites, int i, const Rect& bounds,
                     std::vector<int>* neighbors) {
  Polygon cell = bounds.polygon();
  std::vector<int> labels(cell.size(), -1);
  const Point2& oi = sites[static_cast<std::size_t>(i)];
  for (std::size_t j = 0; j < sites.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    const Point2 normal = sites[j] - oi;
    const double offset = normal.dot(0.5 * (sites[j] + oi));
    cell = clip_halfplane(cell, normal, offset, &labels, static_cast<int>(j));
    if (cell.empty()) break;
  }
  if (neighbors) {
    neighbors->clear();
    const double min_len = 1e-9 * std::max(bounds.width(), bounds.height());
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (labels[k] < 0) continue;
      if ((cell[(k + 1) % cell.size()] - cell[k]).norm() <= min_len) continue;
      neighbors->push_back(labels[k]);
    }
    std::sort(neighbors->begin(), neighbors->end());
    neighbors->erase(std::unique(neighbors->begin(), neighbors->end()), neighbors->end());
  }
  return cell;
}

VoronoiPartition voronoi_partition(std::span<const Point2> sensors, const Domain2D& domain) {
  domain.validate();
  if (sensors.empty()) fail(ErrorKind::kDegenerateSites, "at least one sensor is required");
  VoronoiPartition part;
  part.bounds = domain.bounds;
  part.sites = separate_coincident(sensors);
  part.grid_resolution = domain.grid_resolution;
  const int n = static_cast<int>(part.sites.size());
  part.cells.reserve(static_cast<std::size_t>(n));
  std::vector<int> nbrs;
  for (int i = 0; i < n; ++i) {
    part.cells.push_back(voronoi_cell(part.sites, i, domain.bounds, &nbrs));
    for (int j : nbrs) part.neighbor_pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(part.neighbor_pairs.begin(), part.neighbor_pairs.end());
  part.neighbor_pairs.erase(std::unique(part.neighbor_pairs.begin(), part.neighbor_pairs.end()),
                            part.neighbor_pairs.end());

  const int res = domain.grid_resolution;
  part.owner.resize(static_cast<std::size_t>(res * res));
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const Point2 q = domain.grid_point(ix, iy);
      int best = 0;
      double best_d = (q - part.sites[0]).squaredNorm();
      for (int k = 1; k < n; ++k) {
        const double d = (q - part.sites[static_cast<std::size_t>(k)]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      part.owner[static_cast<std::size_t>(iy * res + ix)] = best;
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// Quadrature

Quadrature parse_quadrature(std::string_view name) {
  if (name == "overlap") return Quadrature::kOverlap;
  if (name == "midpoint") return Quadrature::kMidpoint;
  fail(ErrorKind::kInvalidConfig, "unknown quadrature '" + std::string(name) + "'");
}

std::string_view to_string(Quadrature q) { return q == Quadrature::kMidpoint ? "midpoint" : "overlap"; }

CellIntegrals integrate_polygon(const Polygon& cell, const DensityField& phi) {
  CellIntegrals out;
  if (cell.size() < 3) return out;
  const Domain2D& dom = phi.domain;
  const int res = dom.grid_resolution;
  const double w = dom.cell_width();
  const double h = dom.cell_height();
  double x_min = cell[0].x(), x_max = x_min, y_min = cell[0].y(), y_max = y_min;
  for (const Point2& p : cell) {
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
    y_min = std::min(y_min, p.y());
    y_max = std::max(y_max, p.y());
  }
  const int ix0 = pixel_floor(x_min, dom.bounds.x_lo, w, res);
  const int ix1 = pixel_floor(x_max, dom.bounds.x_lo, w, res);
  const int iy0 = pixel_floor(y_min, dom.bounds.y_lo, h, res);
  const int iy1 = pixel_floor(y_max, dom.bounds.y_lo, h, res);
  const std::vector<HalfPlane> planes = edge_halfplanes(cell);
  const double pixel_area = w * h;
  const double pixel_spread = (w * w + h * h) / 12.0;

  for (int iy = iy0; iy <= iy1; ++iy) {
    const double ylo = dom.bounds.y_lo + iy * h;
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double value = phi.at(ix, iy);
      if (value == 0.0) continue;
      const double xlo = dom.bounds.x_lo + ix * w;
      const Point2 c00(xlo, ylo), c10(xlo + w, ylo), c11(xlo + w, ylo + h), c01(xlo, ylo + h);
      if (inside_all(planes, c00) && inside_all(planes, c10) && inside_all(planes, c11) &&
          inside_all(planes, c01)) {
        const Point2 c(xlo + 0.5 * w, ylo + 0.5 * h);
        out.mass += value * pixel_area;
        out.first += value * pixel_area * c;
        out.second += value * pixel_area * (c.squaredNorm() + pixel_spread);
        continue;
      }
      Polygon piece{c00, c10, c11, c01};
      for (const HalfPlane& hp : planes) {
        piece = clip_halfplane(piece, hp.normal, hp.offset);
        if (piece.empty()) break;
      }
      if (piece.size() < 3) continue;
      const PolygonMoments m = polygon_moments(piece);
      if (m.area <= 0.0) continue;
      out.mass += value * m.area;
      out.first += value * m.first;
      out.second += value * m.second;
    }
  }
  return out;
}

CellIntegrals integrate_owned(const VoronoiPartition& partition, int i, const DensityField& phi) {
  CellIntegrals out;
  const Domain2D& dom = phi.domain;
  const int res = dom.grid_resolution;
  if (res != partition.grid_resolution) {
    fail(ErrorKind::kDimensionMismatch, "partition and density grids differ");
  }
  const double area = dom.cell_area();
  const double spread = (dom.cell_width() * dom.cell_width() + dom.cell_height() * dom.cell_height()) / 12.0;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      if (partition.owner[static_cast<std::size_t>(iy * res + ix)] != i) continue;
      const double value = phi.at(ix, iy);
      if (value == 0.0) continue;
      const Point2 q = dom.grid_point(ix, iy);
      out.mass += value * area;
      out.first += value * area * q;
      out.second += value * area * (q.squaredNorm() + spread);
    }
  }
  return out;
}

CellIntegrals cell_integrals(const VoronoiPartition& partition, int i, const DensityField& phi,
                             Quadrature quadrature) {
  if (quadrature == Quadrature::kMidpoint) return integrate_owned(partition, i, phi);
  return integrate_polygon(partition.cells.at(static_cast<std::size_t>(i)), phi);
}

Centroid centroid_from(const CellIntegrals& integrals, const Polygon& cell, double mass_floor) {
  Centroid c;
  c.mass = integrals.mass;
  if (integrals.mass > mass_floor) {
    c.position = integrals.first / integrals.mass;
  } else {
    c.position = polygon_centroid(cell);
    c.fallback = true;
  }
  return c;
}

Centroid cell_centroid(const Polygon& cell, const DensityField& phi, double mass_floor) {
  return centroid_from(integrate_polygon(cell, phi), cell, mass_floor);
}

Centroid cell_centroid(const VoronoiPartition& partition, int i, const DensityField& phi,
                       Quadrature quadrature, double mass_floor) {
  return centroid_from(cell_integrals(partition, i, phi, quadrature),
                       partition.cells.at(static_cast<std::size_t>(i)), mass_floor);
}

double coverage_cost(std::span<const Point2> sensors, const VoronoiPartition& partition,
                     const DensityField& phi, Quadrature quadrature) {
  if (sensors.size() != partition.cells.size()) {
    fail(ErrorKind::kDimensionMismatch, "sensor count does not match partition");
  }
  double h = 0.0;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const CellIntegrals c = cell_integrals(partition, static_cast<int>(i), phi, quadrature);
    const Point2& o = sensors[i];
    h += c.second - 2.0 * o.dot(c.first) + o.squaredNorm() * c.mass;
  }
  return std::max(h, 0.0);
}

double centroid_cost_term(const Point2& o, const Point2& g) noexcept { return 0.5 * (o - g).squaredNorm(); }

double centroid_cost(std::span<const Point2> sensors, std::span<const Point2> centroids) {
  if (sensors.size() != centroids.size()) {
    fail(ErrorKind::kDimensionMismatch, "sensor and centroid counts differ");
  }
  double j = 0.0;
  for (std::size_t i = 0; i < sensors.size(); ++i) j += centroid_cost_term(sensors[i], centroids[i]);
  return j;
}

// ---------------------------------------------------------------------------
// Controller

CoverageCommand coverage_control(const Point2& o, const Point2& g, const Eigen::Matrix2d& dg_do,
                                 const Point2& dg_dt, double j, double kappa, double speed_limit) {
  CoverageCommand cmd;
  const Point2 d = o - g;
  const Point2 a = -(Eigen::Matrix2d::Identity() - dg_do).transpose() * d;
  const double b = kappa * j - d.dot(dg_dt);
  if (b > 0.0) {
    const double denom = a.squaredNorm() + 1.0;
    cmd.velocity = a * (b / denom);
    cmd.relaxation = b / denom;
  }
  cmd.residual = a.dot(cmd.velocity) + cmd.relaxation - b;
  const double speed = cmd.velocity.norm();
  if (speed > speed_limit) {
    cmd.velocity *= speed_limit / speed;
    cmd.clamped = true;
  }
  return cmd;
}

Eigen::Matrix2d centroid_jacobian(std::span<const Point2> sites, int i, const Rect& bounds,
                                  const DensityField& phi, double h, double mass_floor) {
  std::vector<Point2> moved(sites.begin(), sites.end());
  const Point2 base = moved[static_cast<std::size_t>(i)];
  Eigen::Matrix2d jac;
  for (int k = 0; k < 2; ++k) {
    Point2 step = Point2::Zero();
    step(k) = h;
    moved[static_cast<std::size_t>(i)] = base + step;
    const Point2 gp = cell_centroid(voronoi_cell(moved, i, bounds), phi, mass_floor).position;
    moved[static_cast<std::size_t>(i)] = base - step;
    const Point2 gm = cell_centroid(voronoi_cell(moved, i, bounds), phi, mass_floor).position;
    jac.col(k) = (gp - gm) / (2.0 * h);
  }
  return jac;
}

JacobianMode parse_jacobian_mode(std::string_view name) {
  if (name == "fd") return JacobianMode::kFiniteDifference;
  if (name == "zero") return JacobianMode::kZero;
  fail(ErrorKind::kInvalidConfig, "unknown dGdO_mode '" + std::string(name) + "'");
}

std::string_view to_string(JacobianMode mode) { return mode == JacobianMode::kZero ? "zero" : "fd"; }

void CoverageParams::validate() const {
  if (grid_resolution < 16) fail(ErrorKind::kInvalidConfig, "coverage.grid_resolution must be at least 16");
  if (!(bump_radius > 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.bump_radius must be positive");
  if (!(decay >= 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.decay must be nonnegative");
  if (!(phi_max > 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.phi_max must be positive");
  if (!(kappa > 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.kappa must be positive");
  if (!(speed_limit > 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.speed_limit must be positive");
  if (!(fd_step > 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.fd_step must be positive");
  if (!(mass_floor >= 0.0)) fail(ErrorKind::kInvalidConfig, "coverage.mass_floor must be nonnegative");
}

FleetReport coverage_commands(std::span<const Point2> positions, const DensityField& phi,
                              const DensityField* phi_prev, const CoverageParams& params, double dt) {
  FleetReport rep;
  rep.partition = voronoi_partition(positions, phi.domain);
  const auto& sites = rep.partition.sites;
  const int n = static_cast<int>(sites.size());
  rep.centroids.reserve(static_cast<std::size_t>(n));
  rep.commands.reserve(static_cast<std::size_t>(n));
  rep.min_residual = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const Polygon& cell = rep.partition.cells[si];
    const CellIntegrals integ = cell_integrals(rep.partition, i, phi, params.quadrature);
    const Centroid g = centroid_from(integ, cell, params.mass_floor);
    const Point2& o = sites[si];
    rep.coverage_cost += integ.second - 2.0 * o.dot(integ.first) + o.squaredNorm() * integ.mass;
    const double j = centroid_cost_term(o, g.position);
    rep.centroid_cost += j;

    Point2 dg_dt = Point2::Zero();
    if (phi_prev != nullptr && dt > 0.0) {
      const Centroid prev = cell_centroid(rep.partition, i, *phi_prev, params.quadrature, params.mass_floor);
      dg_dt = (g.position - prev.position) / dt;
    }
    Eigen::Matrix2d dg_do = Eigen::Matrix2d::Zero();
    if (params.dgdo_mode == JacobianMode::kFiniteDifference) {
      dg_do = centroid_jacobian(sites, i, rep.partition.bounds, phi, params.fd_step, params.mass_floor);
    }
    const CoverageCommand cmd = coverage_control(o, g.position, dg_do, dg_dt, j, params.kappa, params.speed_limit);
    if (cmd.clamped) ++rep.clamp_events;
    rep.min_residual = std::min(rep.min_residual, cmd.residual);
    rep.centroids.push_back(g);
    rep.commands.push_back(cmd);
  }
  rep.coverage_cost = std::max(rep.coverage_cost, 0.0);
  return rep;
}

SensorFleet fleet_step(const SensorFleet& fleet, const DensityField& phi, const DensityField* phi_prev,
                       const CoverageParams& params, double dt, FleetReport* report) {
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidConfig, "fleet_step needs dt > 0");
  CoverageParams p = params;
  p.speed_limit = fleet.speed_limit;
  FleetReport rep = coverage_commands(fleet.positions, phi, phi_prev, p, dt);
  SensorFleet next = fleet;
  next.commands.resize(fleet.positions.size());
  for (std::size_t i = 0; i < fleet.positions.size(); ++i) {
    next.commands[i] = rep.commands[i].velocity;
    next.positions[i] = phi.domain.bounds.clamp(fleet.positions[i] + dt * next.commands[i]);
  }
  if (report) *report = std::move(rep);
  return next;
}

}  // namespace apnet
