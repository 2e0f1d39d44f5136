#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "apnet/coverage.hpp"
#include "apnet/diagnostics.hpp"
#include "apnet/errors.hpp"
#include "apnet/graph.hpp"
#include "apnet/metrics.hpp"
#include "apnet/network.hpp"
#include "apnet/projection.hpp"
#include "apnet/scenario.hpp"
#include "apnet/simulation.hpp"

namespace py = pybind11;
using namespace apnet;
using nlohmann::json;
using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

namespace {

std::vector<Point2> to_points(const Points& m) {
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) out.emplace_back(m(k, 0), m(k, 1));
  return out;
}

Points from_points(const std::vector<Point2>& pts) {
  Points m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t k = 0; k < pts.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
  return m;
}

ScenarioConfig parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

NetworkParams network_params(double a, double k0, double alpha, double gamma, double sigma,
                             const Eigen::VectorXd& beta, double sensing_radius) {
  NetworkParams p;
  p.a = a;
  p.k0 = k0;
  p.alpha = alpha;
  p.gamma = gamma;
  p.sigma = sigma;
  p.beta = beta;
  p.sensing_radius = sensing_radius;
  return p;
}

Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges) { return Graph::build(n, edges); }

py::dict partition_dict(const VoronoiPartition& part) {
  py::list cells;
  for (const auto& c : part.cells) cells.append(from_points(c));
  py::dict d;
  d["sites"] = from_points(part.sites);
  d["cells"] = cells;
  d["neighbor_pairs"] = part.neighbor_pairs;
  d["owner"] = part.owner;
  d["grid_resolution"] = part.grid_resolution;
  return d;
}

DensityField density_from(const Rect& bounds, const Eigen::MatrixXd& phi) {
  if (phi.rows() != phi.cols()) fail(ErrorKind::kDimensionMismatch, "density grid must be square");
  Domain2D dom{bounds, static_cast<int>(phi.rows())};
  dom.validate();
  DensityField f = DensityField::uniform(dom, 0.0);
  for (int iy = 0; iy < dom.grid_resolution; ++iy)
    for (int ix = 0; ix < dom.grid_resolution; ++ix) f.at(ix, iy) = phi(iy, ix);
  return f;
}

Rect make_rect(const std::vector<double>& b) {
  if (b.size() != 4) fail(ErrorKind::kDimensionMismatch, "bounds must be [x_lo, x_hi, y_lo, y_hi]");
  return Rect{b[0], b[1], b[2], b[3]};
}

py::dict trace_arrays(const Simulation& sim) {
  const Trace& tr = sim.trace();
  const auto rows = static_cast<Eigen::Index>(tr.rows.size());
  const int n = tr.node_count;
  py::dict out;
  Eigen::VectorXd t(rows);
  for (Eigen::Index r = 0; r < rows; ++r) t(r) = tr.rows[static_cast<std::size_t>(r)].t;
  out["t"] = t;

  py::dict channels;
  for (std::size_t c = 0; c < tr.channel_names.size(); ++c) {
    py::dict ch;
    const auto scalar = [&](double ChannelSample::*field) {
      Eigen::VectorXd v(rows);
      for (Eigen::Index r = 0; r < rows; ++r) v(r) = tr.rows[static_cast<std::size_t>(r)].channels[c].*field;
      return v;
    };
    const auto matrix = [&](Eigen::VectorXd ChannelSample::*field) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Constant(rows, n, kNaN);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd& v = tr.rows[static_cast<std::size_t>(r)].channels[c].*field;
        if (v.size() == n) m.row(r) = v.transpose();
      }
      return m;
    };
    ch["epsilon"] = scalar(&ChannelSample::epsilon);
    ch["consensus_error"] = scalar(&ChannelSample::consensus_error);
    ch["e_x"] = scalar(&ChannelSample::e_x);
    ch["e_z"] = scalar(&ChannelSample::e_z);
    ch["delta_tilde"] = scalar(&ChannelSample::delta_tilde);
    ch["lyapunov"] = scalar(&ChannelSample::lyapunov);
    ch["x"] = matrix(&ChannelSample::x);
    ch["p"] = matrix(&ChannelSample::p);
    ch["x_hat"] = matrix(&ChannelSample::x_hat);
    ch["delta_hat"] = matrix(&ChannelSample::delta_hat);
    ch["delta"] = matrix(&ChannelSample::delta);
    Eigen::VectorXi active(rows);
    for (Eigen::Index r = 0; r < rows; ++r) active(r) = tr.rows[static_cast<std::size_t>(r)].channels[c].active_count;
    ch["active_count"] = active;
    channels[py::str(tr.channel_names[c])] = ch;
  }
  out["channels"] = channels;

  if (sim.has_target()) {
    Points target(rows, 2), estimate(rows, 2);
    Eigen::VectorXd speed(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const TraceRow& row = tr.rows[static_cast<std::size_t>(r)];
      target.row(r) = row.target.position.transpose();
      estimate.row(r) = row.estimate.transpose();
      speed(r) = row.target.speed;
    }
    out["target"] = target;
    out["target_speed"] = speed;
    out["estimate"] = estimate;
  }
  if (tr.coverage) {
    const auto sensors = static_cast<Eigen::Index>(tr.rows.empty() ? 0 : tr.rows.front().positions.size());
    py::array_t<double> positions({rows, sensors, Eigen::Index{2}});
    auto pv = positions.mutable_unchecked<3>();
    Eigen::VectorXd h(rows), hn(rows), jc(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const TraceRow& row = tr.rows[static_cast<std::size_t>(r)];
      for (Eigen::Index k = 0; k < sensors; ++k) {
        pv(r, k, 0) = row.positions[static_cast<std::size_t>(k)].x();
        pv(r, k, 1) = row.positions[static_cast<std::size_t>(k)].y();
      }
      h(r) = row.coverage_cost;
      hn(r) = row.normalized_cost;
      jc(r) = row.centroid_cost;
    }
    out["positions"] = positions;
    out["H"] = h;
    out["H_normalized"] = hn;
    out["J"] = jc;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive consensus sensor network core";

  // Owned by the module for the life of the interpreter.
  static PyObject* error_type = PyErr_NewException("apnet._core.ApnetError", PyExc_RuntimeError, nullptr);
  m.attr("ApnetError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string kind(to_string(e.kind()));
      py::object inst = py::handle(error_type)(kind + ": " + e.what());
      inst.attr("kind") = py::str(kind);
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def(py::init(&make_graph), py::arg("node_count"), py::arg("edges"),
           "Connected undirected graph from 0-indexed edge pairs.")
      .def_property_readonly("node_count", &Graph::node_count)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def_property_readonly("edges",
                             [](const Graph& g) {
                               std::vector<std::pair<int, int>> out;
                               for (const Edge& e : g.edges()) out.emplace_back(e.u, e.v);
                               return out;
                             })
      .def("neighbors", &Graph::neighbors, py::arg("i"))
      .def_property_readonly("degree", &Graph::degree)
      .def_property_readonly("adjacency", &Graph::adjacency)
      .def_property_readonly("incidence", &Graph::incidence)
      .def_property_readonly("laplacian", &Graph::laplacian)
      .def_property_readonly("laplacian_pinv", &Graph::laplacian_pinv)
      .def_property_readonly("laplacian_spectrum", &Graph::laplacian_spectrum);
  m.def("regularized_laplacian", &regularized_laplacian, py::arg("graph"), py::arg("k"));
  m.def("grid_edges", &grid_edges, py::arg("rows"), py::arg("cols"));
  m.def("figure1_edges", &figure1_edges);

  m.def(
      "proj",
      [](const Eigen::VectorXd& theta, const Eigen::VectorXd& y, const Eigen::VectorXd& lo,
         const Eigen::VectorXd& hi, const Eigen::VectorXd& nu) {
        ProjectionBounds b{lo, hi, nu};
        b.validate();
        return proj(theta, y, b);
      },
      py::arg("theta"), py::arg("y"), py::arg("theta_min"), py::arg("theta_max"), py::arg("nu"));

  m.def("sensing_kernel", &sensing_kernel, py::arg("distance"), py::arg("radius"));
  m.def(
      "activation_matrices",
      [](const Points& agents, const Points& inputs, double radius) {
        const auto a = to_points(agents);
        const auto in = to_points(inputs);
        const ActivationMatrices act = activation_matrices(a, in, radius);
        return py::make_tuple(act.k1, act.k2);
      },
      py::arg("agents"), py::arg("inputs"), py::arg("radius"), "Returns (k1, K2).");
  m.def(
      "nominal_rates",
      [](const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Eigen::VectorXd& k1,
         const Eigen::MatrixXd& k2, const Eigen::VectorXd& c, double a, double k0, double alpha, double gamma,
         double sigma, const Eigen::VectorXd& beta) {
        const NetworkParams params = network_params(a, k0, alpha, gamma, sigma, beta, 1.0);
        params.validate(g.node_count());
        const ActivationMatrices act{k1, k2};
        return py::make_tuple(compact_state_rate(x, p, g, act, c, params),
                              compact_integral_rate(x, p, g, params));
      },
      py::arg("graph"), py::arg("x"), py::arg("p"), py::arg("k1"), py::arg("k2"), py::arg("c"), py::arg("a"),
      py::arg("k0"), py::arg("alpha"), py::arg("gamma"), py::arg("sigma"), py::arg("beta"),
      "Returns (dx/dt, dp/dt) of the nominal closed loop.");

  m.def(
      "theorem1_bound",
      [](const Graph& g, double a, double k0, double alpha, double gamma, double sigma,
         const Eigen::VectorXd& beta, double epsilon_bar, double c_bar_d, double p1_bar, double p2_bar) {
        const NetworkParams params = network_params(a, k0, alpha, gamma, sigma, beta, 1.0);
        const NominalBound b = theorem1_bound(params, g, NominalBoundInputs{epsilon_bar, c_bar_d, p1_bar, p2_bar});
        py::dict d;
        d["bound"] = b.bound;
        d["first_term"] = b.first_term;
        d["second_term"] = b.second_term;
        d["lambda_min_f"] = b.lambda_min_f;
        d["beta_norm"] = b.beta_norm;
        return d;
      },
      py::arg("graph"), py::arg("a"), py::arg("k0"), py::arg("alpha"), py::arg("gamma"), py::arg("sigma"),
      py::arg("beta"), py::arg("epsilon_bar"), py::arg("c_bar_d"), py::arg("p1_bar"), py::arg("p2_bar"));
  m.def(
      "theorem2_bounds",
      [](const Graph& g, double a, double k0, double alpha, double gamma, double sigma,
         const Eigen::VectorXd& beta, double gamma_rate, double mu, double delta_hat_max, double delta_bar,
         double delta_bar_d) {
        const NetworkParams params = network_params(a, k0, alpha, gamma, sigma, beta, 1.0);
        AdaptiveParams ad;
        ad.gamma_rate = gamma_rate;
        ad.mu = mu;
        ad.delta_hat_max = delta_hat_max;
        const AdaptiveBounds b = theorem2_bounds(ad, params, g, delta_bar, delta_bar_d);
        py::dict d;
        d["gamma0"] = b.gamma0;
        d["gamma1"] = b.gamma1;
        d["eta1"] = b.eta1;
        d["eta2"] = b.eta2;
        d["e_x"] = b.e_x;
        d["e_z"] = b.e_z;
        d["delta_tilde"] = b.delta_tilde;
        d["lyapunov_level"] = b.lyapunov_level;
        return d;
      },
      py::arg("graph"), py::arg("a"), py::arg("k0"), py::arg("alpha"), py::arg("gamma"), py::arg("sigma"),
      py::arg("beta"), py::arg("gamma_rate"), py::arg("mu"), py::arg("delta_hat_max"), py::arg("delta_bar"),
      py::arg("delta_bar_d"));

  m.def(
      "voronoi_partition",
      [](const Points& sites, const std::vector<double>& bounds, int resolution) {
        const auto s = to_points(sites);
        Domain2D dom{make_rect(bounds), resolution};
        dom.validate();
        return partition_dict(voronoi_partition(s, dom));
      },
      py::arg("sites"), py::arg("bounds"), py::arg("resolution") = 64);
  m.def(
      "centroids",
      [](const Points& sites, const std::vector<double>& bounds, const Eigen::MatrixXd& phi) {
        const DensityField f = density_from(make_rect(bounds), phi);
        const auto s = to_points(sites);
        const VoronoiPartition part = voronoi_partition(s, f.domain);
        std::vector<Point2> g;
        for (int i = 0; i < static_cast<int>(s.size()); ++i)
          g.push_back(cell_centroid(part, i, f, Quadrature::kOverlap).position);
        return from_points(g);
      },
      py::arg("sites"), py::arg("bounds"), py::arg("phi"), "Density-weighted Voronoi centroids.");
  m.def(
      "coverage_cost",
      [](const Points& sites, const std::vector<double>& bounds, const Eigen::MatrixXd& phi) {
        const DensityField f = density_from(make_rect(bounds), phi);
        const auto s = to_points(sites);
        return coverage_cost(s, voronoi_partition(s, f.domain), f);
      },
      py::arg("sites"), py::arg("bounds"), py::arg("phi"));
  m.def(
      "coverage_control",
      [](const Eigen::Vector2d& o, const Eigen::Vector2d& g, const Eigen::Matrix2d& dg_do,
         const Eigen::Vector2d& dg_dt, double j, double kappa, double speed_limit) {
        const CoverageCommand c = coverage_control(o, g, dg_do, dg_dt, j, kappa, speed_limit);
        py::dict d;
        d["velocity"] = Eigen::Vector2d(c.velocity);
        d["relaxation"] = c.relaxation;
        d["residual"] = c.residual;
        d["clamped"] = c.clamped;
        return d;
      },
      py::arg("o"), py::arg("g"), py::arg("dg_do"), py::arg("dg_dt"), py::arg("j"), py::arg("kappa"),
      py::arg("speed_limit") = std::numeric_limits<double>::infinity());
  m.def(
      "coverage_step",
      [](const Points& sites, const std::vector<double>& bounds, const Eigen::MatrixXd& phi, double kappa,
         double speed_limit, double dt) {
        const DensityField f = density_from(make_rect(bounds), phi);
        CoverageParams params;
        params.grid_resolution = f.domain.grid_resolution;
        params.kappa = kappa;
        params.speed_limit = speed_limit;
        params.validate();
        SensorFleet fleet{to_points(sites), {}, speed_limit};
        FleetReport rep;
        const SensorFleet next = fleet_step(fleet, f, nullptr, params, dt, &rep);
        py::dict d;
        d["positions"] = from_points(next.positions);
        d["H"] = rep.coverage_cost;
        d["J"] = rep.centroid_cost;
        d["clamp_events"] = rep.clamp_events;
        d["min_residual"] = rep.min_residual;
        return d;
      },
      py::arg("sites"), py::arg("bounds"), py::arg("phi"), py::arg("kappa"), py::arg("speed_limit"),
      py::arg("dt"), "One coverage update on a static density.");

  m.def("default_scenario_json", [] { return scenario_to_json(sec5_default_scenario()).dump(); });
  m.def("validate_scenario_json", [](const std::string& text) {
    ScenarioConfig cfg = parse_scenario(text);
    cfg.validate();
    return scenario_to_json(cfg).dump();
  });

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const std::string& text) { return std::make_unique<Simulation>(parse_scenario(text)); }), py::arg("scenario_json"))
      .def_property_readonly("node_count", &Simulation::node_count)
      .def_property_readonly("channel_count", &Simulation::channel_count)
      .def_property_readonly("step_index", &Simulation::step_index)
      .def_property_readonly("total_steps", &Simulation::total_steps)
      .def_property_readonly("time", &Simulation::time)
      .def_property_readonly("finished", &Simulation::finished)
      .def_property_readonly("state", &Simulation::state)
      .def_property_readonly("projection_clamps", &Simulation::projection_clamps)
      .def(
          "step",
          [](Simulation& s, long count) {
            py::gil_scoped_release release;
            for (long k = 0; k < count && !s.finished(); ++k) s.step();
          },
          py::arg("count") = 1)
      .def("run",
           [](Simulation& s) {
             py::gil_scoped_release release;
             s.run();
           })
      .def(
          "command_target",
          [](Simulation& s, double x, double y, std::int64_t seq) {
            const ExternalTarget::Ack a = s.command_target(Point2(x, y), seq);
            py::dict d;
            d["applied"] = Eigen::Vector2d(a.applied);
            d["clamped"] = a.clamped;
            d["stale"] = a.stale;
            d["seq"] = a.seq;
            return d;
          },
          py::arg("x"), py::arg("y"), py::arg("seq"))
      .def("positions", [](const Simulation& s) { return from_points(s.positions()); })
      .def("target",
           [](const Simulation& s) -> py::object {
             if (!s.has_target()) return py::none();
             return py::cast(Eigen::Vector2d(s.target().position));
           })
      .def("density",
           [](const Simulation& s) -> py::object {
             const DensityField* f = s.density();
             if (!f) return py::none();
             const int r = f->domain.grid_resolution;
             Eigen::MatrixXd m(r, r);
             for (int iy = 0; iy < r; ++iy)
               for (int ix = 0; ix < r; ++ix) m(iy, ix) = f->at(ix, iy);
             return py::cast(m);
           })
      .def("trace", &trace_arrays, "Recorded rows as numpy arrays.")
      .def(
          "report_json",
          [](const Simulation& s, double dwell_radius) { return report_json(evaluate_run(s, dwell_radius)).dump(); },
          py::arg("dwell_radius") = 2.0)
      .def(
          "export",
          [](const Simulation& s, const std::string& dir) { export_metrics(s, evaluate_run(s), dir); },
          py::arg("dir"), "Writes trace.csv, summary.json and frames under dir.");
}
