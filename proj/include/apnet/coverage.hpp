#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "apnet/geometry.hpp"

namespace apnet {

/// Planar domain D and the resolution of the density grid over it.
struct Domain2D {
  Rect bounds{0.0, 20.0, 0.0, 20.0};
  int grid_resolution = 64;

  /// Throws InvalidConfig on an empty rectangle or resolution < 16.
  void validate() const;
  double cell_width() const noexcept { return bounds.width() / grid_resolution; }
  double cell_height() const noexcept { return bounds.height() / grid_resolution; }
  double cell_area() const noexcept { return cell_width() * cell_height(); }
  Point2 grid_point(int ix, int iy) const noexcept {
    return {bounds.x_lo + (ix + 0.5) * cell_width(), bounds.y_lo + (iy + 0.5) * cell_height()};
  }
  int cell_count() const noexcept { return grid_resolution * grid_resolution; }
};

/// Piecewise-constant density phi over the grid, row-major (index iy * R + ix).
struct DensityField {
  Domain2D domain;
  std::vector<double> phi;
  double bump_radius = 1.5;
  double decay = 0.02;
  double phi_max = 1e3;

  static DensityField uniform(const Domain2D& domain, double value);
  double& at(int ix, int iy) { return phi[static_cast<std::size_t>(iy * domain.grid_resolution + ix)]; }
  double at(int ix, int iy) const {
    return phi[static_cast<std::size_t>(iy * domain.grid_resolution + ix)];
  }
  double total_mass() const;
  double max_value() const;
};

struct TargetEstimate {
  Point2 position = Point2::Zero();
  double speed = 0.0;
};

/// One explicit step of the deposition-decay law. Deposition has magnitude
/// 1 / (|speed| + 0.1) and is shaped by a unit-peak cosine bump around the
/// estimated position; the result is clamped to [0, phi_max].
DensityField density_step(const DensityField& phi, const TargetEstimate& estimate, double dt);

struct VoronoiPartition {
  Rect bounds;
  std::vector<Point2> sites;  // after coincident-site separation
  std::vector<Polygon> cells;
  std::vector<std::pair<int, int>> neighbor_pairs;  // i < j, sorted
  std::vector<int> owner;                           // nearest site per grid point
  int grid_resolution = 0;
};

/// Spreads coincident sites apart by 1e-6 m along index-dependent directions.
/// Throws DegenerateSites when they cannot be separated.
std::vector<Point2> separate_coincident(std::span<const Point2> sites);

/// Cell of site i: the domain clipped by every bisector half-plane. When
/// `neighbors` is given it receives the indices of sites sharing an edge.
Polygon voronoi_cell(std::span<const Point2> sites, int i, const Rect& bounds,
                     std::vector<int>* neighbors = nullptr);

VoronoiPartition voronoi_partition(std::span<const Point2> sensors, const Domain2D& domain);

/// kOverlap integrates the piecewise-constant density exactly over the cell
/// polygon (pixel/polygon overlap areas), so moments are continuous in the
/// sites. kMidpoint assigns each pixel wholly to the owner of its center.
enum class Quadrature { kOverlap, kMidpoint };

Quadrature parse_quadrature(std::string_view name);
std::string_view to_string(Quadrature q);

/// Integrals of phi, q*phi and |q|^2*phi over a cell.
struct CellIntegrals {
  double mass = 0.0;
  Point2 first = Point2::Zero();
  double second = 0.0;
};

CellIntegrals integrate_polygon(const Polygon& cell, const DensityField& phi);
CellIntegrals integrate_owned(const VoronoiPartition& partition, int i, const DensityField& phi);
CellIntegrals cell_integrals(const VoronoiPartition& partition, int i, const DensityField& phi,
                             Quadrature quadrature);

struct Centroid {
  Point2 position = Point2::Zero();
  double mass = 0.0;
  bool fallback = false;  // geometric centroid used because mass < mass_floor
};

inline constexpr double kDefaultMassFloor = 1e-12;

Centroid centroid_from(const CellIntegrals& integrals, const Polygon& cell,
                       double mass_floor = kDefaultMassFloor);
/// Weighted center of mass of a polygon under overlap quadrature.
Centroid cell_centroid(const Polygon& cell, const DensityField& phi,
                       double mass_floor = kDefaultMassFloor);
Centroid cell_centroid(const VoronoiPartition& partition, int i, const DensityField& phi,
                       Quadrature quadrature, double mass_floor = kDefaultMassFloor);

/// Sum over cells of the integral of |O_i - q|^2 phi(q).
double coverage_cost(std::span<const Point2> sensors, const VoronoiPartition& partition,
                     const DensityField& phi, Quadrature quadrature = Quadrature::kOverlap);

double centroid_cost_term(const Point2& o, const Point2& g) noexcept;
/// Throws DimensionMismatch when lengths differ.
double centroid_cost(std::span<const Point2> sensors, std::span<const Point2> centroids);

struct CoverageCommand {
  Point2 velocity = Point2::Zero();
  double relaxation = 0.0;  // r_i
  double residual = 0.0;    // a.U + r - b before the speed clamp, >= 0 when feasible
  bool clamped = false;
};

/// Minimum-norm solution of
///   min |U|^2 + r^2  s.t.  a.U + r >= b,
///   a = -(I - dG/dO)^T (O - G),  b = kappa * J - (O - G).dG/dt,
/// followed by a clamp of |U| to speed_limit (pass infinity to disable).
CoverageCommand coverage_control(const Point2& o, const Point2& g, const Eigen::Matrix2d& dg_do,
                                 const Point2& dg_dt, double j, double kappa, double speed_limit);

/// Central finite-difference Jacobian of G_i with respect to O_i, moving
/// site i by +-h and re-clipping its cell (overlap quadrature).
Eigen::Matrix2d centroid_jacobian(std::span<const Point2> sites, int i, const Rect& bounds,
                                  const DensityField& phi, double h = 1e-3,
                                  double mass_floor = kDefaultMassFloor);

enum class JacobianMode { kFiniteDifference, kZero };

JacobianMode parse_jacobian_mode(std::string_view name);
std::string_view to_string(JacobianMode mode);

struct CoverageParams {
  int grid_resolution = 64;
  double bump_radius = 1.5;
  double decay = 0.02;
  double phi_max = 1e3;
  double kappa = 1.0;
  double speed_limit = 2.0;
  JacobianMode dgdo_mode = JacobianMode::kFiniteDifference;
  Quadrature quadrature = Quadrature::kOverlap;
  double fd_step = 1e-3;
  double mass_floor = kDefaultMassFloor;

  void validate() const;
};

struct SensorFleet {
  std::vector<Point2> positions;
  std::vector<Point2> commands;
  double speed_limit = 2.0;
};

struct FleetReport {
  VoronoiPartition partition;
  std::vector<Centroid> centroids;
  std::vector<CoverageCommand> commands;
  double coverage_cost = 0.0;  // H at the step's start
  double centroid_cost = 0.0;  // J at the step's start
  int clamp_events = 0;
  double min_residual = 0.0;
};

/// Computes the coverage commands for the current positions. G_i/dt is the
/// backward difference G_i(O, phi) - G_i(O, phi_prev) over dt; pass
/// phi_prev = nullptr to treat the density as static.
FleetReport coverage_commands(std::span<const Point2> positions, const DensityField& phi,
                              const DensityField* phi_prev, const CoverageParams& params, double dt);

/// Recomputes the commands, moves every sensor by dt * U_i and clamps it to D.
SensorFleet fleet_step(const SensorFleet& fleet, const DensityField& phi,
                       const DensityField* phi_prev, const CoverageParams& params, double dt,
                       FleetReport* report = nullptr);

}  // namespace apnet
