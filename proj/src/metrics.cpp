#include "apnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "apnet/errors.hpp"

namespace apnet {

using nlohmann::json;

namespace {

double declared_bound(const ValueSpec& v, const ScenarioConfig& cfg) {
  switch (v.kind) {
    case ValueSpec::Kind::kTargetX: return std::max(std::abs(cfg.domain.x_lo), std::abs(cfg.domain.x_hi));
    case ValueSpec::Kind::kTargetY: return std::max(std::abs(cfg.domain.y_lo), std::abs(cfg.domain.y_hi));
    case ValueSpec::Kind::kTargetSpeed: return cfg.target.v_max;
    default: return v.bound();
  }
}

double declared_rate(const ValueSpec& v, const ScenarioConfig& cfg) {
  switch (v.kind) {
    case ValueSpec::Kind::kTargetX:
    case ValueSpec::Kind::kTargetY: return cfg.target.v_max;
    case ValueSpec::Kind::kTargetSpeed: return kNaN;
    default: return v.rate_bound();
  }
}

BoundCheck make_check(const std::string& name, double bound, const std::vector<double>& t,
                      const std::vector<double>& v, std::optional<double> cutoff) {
  BoundCheck c;
  c.name = name;
  c.bound = bound;
  c.cutoff = cutoff;
  if (cutoff) {
    c.observed_max = max_after(t, v, *cutoff);
    c.satisfied = c.observed_max <= bound;
  } else {
    c.observed_max = v.empty() ? kNaN : *std::max_element(v.begin(), v.end());
    c.satisfied = false;
  }
  return c;
}

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RunReport evaluate_run(const Simulation& sim, double dwell_radius) {
  const ScenarioConfig& cfg = sim.config();
  const Trace& tr = sim.trace();
  RunReport rep;
  rep.scenario = cfg.name;
  rep.seed = cfg.seed;
  rep.steps = sim.step_index();
  rep.sim_time = sim.time();
  rep.dwell_radius = dwell_radius;
  rep.projection_clamps = sim.projection_clamps();
  const std::vector<double> t = tr.times();
  const int n = sim.node_count();

  for (int c = 0; c < sim.channel_count(); ++c) {
    const ChannelConfig& cc = cfg.channels[static_cast<std::size_t>(c)];
    ChannelReport cr;
    cr.channel = cc.name;
    cr.adaptive = cc.adaptive.has_value();
    if (!tr.rows.empty()) {
      const ChannelSample& last = tr.rows.back().channels[static_cast<std::size_t>(c)];
      cr.final_e_x = last.e_x;
      cr.final_e_z = last.e_z;
      cr.final_delta_tilde = last.delta_tilde;
      cr.final_consensus_error = last.consensus_error;
    }

    if (!cr.adaptive) {
      NominalBoundInputs in;
      for (const auto& input : cfg.inputs) {
        const ValueSpec& v = input.values.at(cc.name);
        in.epsilon_bar = std::max(in.epsilon_bar, declared_bound(v, cfg));
        const double r = declared_rate(v, cfg);
        in.c_bar_d = std::isnan(r) || std::isnan(in.c_bar_d) ? kNaN : std::max(in.c_bar_d, r);
      }
      for (std::size_t k = 0; k < tr.rows.size(); ++k) {
        const auto& s = tr.rows[k].channels[static_cast<std::size_t>(c)];
        in.p1_bar = std::max(in.p1_bar, s.kc_c.norm());
        if (k + 1 < tr.rows.size()) {
          const auto& s2 = tr.rows[k + 1].channels[static_cast<std::size_t>(c)];
          in.p2_bar = std::max(in.p2_bar, ((s2.kc_c - s.kc_c) / (t[k + 1] - t[k])).norm());
        }
      }
      cr.nominal_inputs = in;
      if (std::isfinite(in.c_bar_d) && cc.uncertainty.kind == UncertaintySpec::Kind::kNone && !cfg.inputs.empty()) {
        cr.nominal = theorem1_bound(cc.network, sim.graph(), in);
        std::vector<double> d2;
        for (const auto& r : tr.rows) {
          const double e = r.channels[static_cast<std::size_t>(c)].consensus_error;
          d2.push_back(std::isfinite(e) ? e * e : std::numeric_limits<double>::infinity());
        }
        const auto cut = transient_cutoff(t, d2, cr.nominal->bound);
        cr.checks.push_back(make_check("delta_squared", cr.nominal->bound, t, d2, cut));
      }
    } else {
      const UncertaintyModel& model = sim.uncertainty(c);
      cr.bounds = theorem2_bounds(*cc.adaptive, cc.network, sim.graph(), model);
      const AdaptiveBounds& b = *cr.bounds;
      const auto ex = tr.series(c, &ChannelSample::e_x);
      const auto ez = tr.series(c, &ChannelSample::e_z);
      const auto dt = tr.series(c, &ChannelSample::delta_tilde);
      const auto v = tr.series(c, &ChannelSample::lyapunov);
      cr.lyapunov_cutoff = transient_cutoff(t, v, b.lyapunov_level);
      cr.checks.push_back(make_check("e_x", b.e_x, t, ex, cr.lyapunov_cutoff));
      cr.checks.push_back(make_check("e_z", b.e_z, t, ez, cr.lyapunov_cutoff));
      cr.checks.push_back(make_check("delta_tilde", b.delta_tilde, t, dt, cr.lyapunov_cutoff));
      if (v.size() >= 2) {
        const auto vd = finite_difference(t, v);
        for (std::size_t k = 0; k < v.size(); ++k) {
          const double es = std::hypot(ex[k], ez[k]);
          if (es > b.eta1 || dt[k] > b.eta2) {
            ++cr.outside_samples;
            if (vd[k] < 0.0) ++cr.outside_decreasing;
          }
        }
        if (cr.lyapunov_cutoff) {
          double rms = 0.0;
          for (std::size_t k = 0; k < v.size(); ++k) {
            if (t[k] < *cr.lyapunov_cutoff) continue;
            rms = std::max(rms, ex[k] / std::sqrt(static_cast<double>(n)));
            if (k + 1 < v.size() && v[k + 1] > v[k]) ++cr.post_cutoff_increases;
          }
          cr.max_rms_e_x = rms;
        }
      }
    }
    for (const auto& chk : cr.checks) rep.bounds_satisfied = rep.bounds_satisfied && chk.satisfied;
    rep.channels.push_back(std::move(cr));
  }

  if (!tr.rows.empty()) {
    rep.final_coverage_cost = tr.rows.back().coverage_cost;
    rep.final_normalized_cost = tr.rows.back().normalized_cost;
    rep.final_centroid_cost = tr.rows.back().centroid_cost;
  }
  if (const ScriptedTrajectory* traj = sim.scripted(); traj && tr.coverage) {
    for (const auto& d : traj->dwells()) {
      DwellReport dr;
      dr.position = d.position;
      dr.start = d.start;
      dr.end = d.end;
      const TraceRow* first = nullptr;
      const TraceRow* last = nullptr;
      for (const auto& r : tr.rows) {
        if (r.t + 1e-9 < d.start || r.t > d.end + 1e-9) continue;
        if (!first) first = &r;
        last = &r;
        if (std::isfinite(r.coverage_cost) && !(r.coverage_cost <= dr.cost_peak)) dr.cost_peak = r.coverage_cost;
      }
      if (first && last) {
        dr.cost_start = first->coverage_cost;
        dr.cost_end = last->coverage_cost;
        dr.normalized_start = first->normalized_cost;
        dr.normalized_end = last->normalized_cost;
        for (const auto& p : last->positions) {
          if ((p - d.position).norm() <= dwell_radius) ++dr.sensors_within;
        }
      }
      rep.dwells.push_back(dr);
    }
  }
  return rep;
}

json report_json(const RunReport& rep) {
  json j;
  j["scenario"] = rep.scenario;
  j["seed"] = rep.seed;
  j["steps"] = rep.steps;
  j["sim_time"] = rep.sim_time;
  j["bounds_satisfied"] = rep.bounds_satisfied;
  j["projection_clamps"] = rep.projection_clamps;
  j["final_costs"] = json{{"H", num(rep.final_coverage_cost)},
                          {"H_normalized", num(rep.final_normalized_cost)},
                          {"J", num(rep.final_centroid_cost)}};
  json chans = json::array();
  for (const auto& c : rep.channels) {
    json cj;
    cj["channel"] = c.channel;
    cj["adaptive"] = c.adaptive;
    json checks = json::object();
    for (const auto& chk : c.checks) {
      checks[chk.name] = json{{"bound", num(chk.bound)},
                              {"observed_max", num(chk.observed_max)},
                              {"transient_cutoff", opt(chk.cutoff)},
                              {"satisfied", chk.satisfied}};
    }
    if (c.nominal) {
      const auto& nb = *c.nominal;
      cj["theorem1"] = json{{"bound", nb.bound},
                            {"first_term", nb.first_term},
                            {"second_term", nb.second_term},
                            {"lambda_min_F", nb.lambda_min_f},
                            {"beta_norm", nb.beta_norm},
                            {"epsilon_bar", c.nominal_inputs.epsilon_bar},
                            {"c_bar_d", num(c.nominal_inputs.c_bar_d)},
                            {"p1_bar", c.nominal_inputs.p1_bar},
                            {"p2_bar", c.nominal_inputs.p2_bar},
                            {"checks", checks}};
    }
    if (c.bounds) {
      const auto& b = *c.bounds;
      cj["theorem2"] = json{{"gamma0", b.gamma0},
                            {"gamma1", b.gamma1},
                            {"eta1", b.eta1},
                            {"eta2", b.eta2},
                            {"alpha0", b.alpha0},
                            {"alpha1", b.alpha1},
                            {"alpha2", b.alpha2},
                            {"delta_bar", b.delta_bar},
                            {"bound_e_x", b.e_x},
                            {"bound_e_z", b.e_z},
                            {"bound_delta_tilde", b.delta_tilde},
                            {"lyapunov_level", b.lyapunov_level},
                            {"transient_cutoff", opt(c.lyapunov_cutoff)},
                            {"satisfied", json{{"e_x", c.checks[0].satisfied},
                                               {"e_z", c.checks[1].satisfied},
                                               {"delta_tilde", c.checks[2].satisfied}}},
                            {"checks", checks},
                            {"outside_samples", c.outside_samples},
                            {"outside_decreasing", c.outside_decreasing},
                            {"outside_fraction", num(c.outside_fraction())},
                            {"post_cutoff_increases", c.post_cutoff_increases},
                            {"max_rms_e_x", num(c.max_rms_e_x)}};
    }
    cj["final"] = json{{"e_x", num(c.final_e_x)},
                       {"e_z", num(c.final_e_z)},
                       {"delta_tilde", num(c.final_delta_tilde)},
                       {"consensus_error", num(c.final_consensus_error)}};
    chans.push_back(std::move(cj));
  }
  j["channels"] = chans;
  json dw = json::array();
  for (const auto& d : rep.dwells) {
    dw.push_back(json{{"position", json::array({d.position.x(), d.position.y()})},
                      {"start", d.start},
                      {"end", d.end},
                      {"sensors_within", d.sensors_within},
                      {"radius", rep.dwell_radius},
                      {"H_start", num(d.cost_start)},
                      {"H_end", num(d.cost_end)},
                      {"H_peak", num(d.cost_peak)},
                      {"H_normalized_start", num(d.normalized_start)},
                      {"H_normalized_end", num(d.normalized_end)}});
  }
  j["dwells"] = dw;
  return j;
}

std::vector<std::string> trace_csv_header(const Trace& tr) {
  std::vector<std::string> h{"t", "step"};
  for (const auto& c : tr.channel_names) {
    for (const char* f : {"eps", "consensus_error", "e_x", "e_z", "delta_tilde", "V", "kcc_norm", "active"}) {
      h.push_back(c + "." + f);
    }
    for (const char* f : {"x", "x_hat", "delta_hat", "delta"}) {
      for (int i = 0; i < tr.node_count; ++i) h.push_back(c + "." + f + "." + std::to_string(i));
    }
  }
  for (const char* f : {"target.x", "target.y", "target.speed", "estimate.x", "estimate.y", "estimate.speed", "H",
                        "H_normalized", "J", "qp_min_residual", "qp_clamps", "projection_clamps"}) {
    h.emplace_back(f);
  }
  for (int i = 0; i < tr.node_count; ++i) {
    h.push_back("O." + std::to_string(i) + ".x");
    h.push_back("O." + std::to_string(i) + ".y");
  }
  for (int i = 0; i < tr.node_count; ++i) {
    h.push_back("G." + std::to_string(i) + ".x");
    h.push_back("G." + std::to_string(i) + ".y");
  }
  return h;
}

void write_trace_csv(const Trace& tr, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) fail(ErrorKind::kIoError, "cannot write " + path);
  const auto header = trace_csv_header(tr);
  for (std::size_t k = 0; k < header.size(); ++k) std::fprintf(f, "%s%s", k ? "," : "", header[k].c_str());
  std::fputc('\n', f);
  const auto put = [&](double v) { std::fprintf(f, ",%.17g", v); };
  const auto put_vec = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < tr.node_count; ++i) put(v.size() > i ? v(i) : kNaN);
  };
  for (const auto& r : tr.rows) {
    std::fprintf(f, "%.17g,%ld", r.t, r.step);
    for (const auto& s : r.channels) {
      put(s.epsilon);
      put(s.consensus_error);
      put(s.e_x);
      put(s.e_z);
      put(s.delta_tilde);
      put(s.lyapunov);
      put(s.kc_c.norm());
      put(s.active_count);
      put_vec(s.x);
      put_vec(s.x_hat);
      put_vec(s.delta_hat);
      put_vec(s.delta);
    }
    put(r.has_target ? r.target.position.x() : kNaN);
    put(r.has_target ? r.target.position.y() : kNaN);
    put(r.has_target ? r.target.speed : kNaN);
    put(r.estimate.x());
    put(r.estimate.y());
    put(r.estimate_speed);
    put(r.coverage_cost);
    put(r.normalized_cost);
    put(r.centroid_cost);
    put(r.qp_min_residual);
    put(r.qp_clamps);
    put(static_cast<double>(r.projection_clamps));
    for (int i = 0; i < tr.node_count; ++i) {
      const bool ok = static_cast<int>(r.positions.size()) > i;
      put(ok ? r.positions[i].x() : kNaN);
      put(ok ? r.positions[i].y() : kNaN);
    }
    for (int i = 0; i < tr.node_count; ++i) {
      const bool ok = static_cast<int>(r.centroids.size()) > i;
      put(ok ? r.centroids[i].x() : kNaN);
      put(ok ? r.centroids[i].y() : kNaN);
    }
    std::fputc('\n', f);
  }
  const bool bad = std::ferror(f) != 0;
  if (std::fclose(f) != 0 || bad) fail(ErrorKind::kIoError, "failed writing " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void export_metrics(const Simulation& sim, const RunReport& report, const std::string& dir, double wall_seconds) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + dir + ": " + ec.message());
  write_trace_csv(sim.trace(), (fs::path(dir) / "trace.csv").string());

  json summary = report_json(report);
  summary["wall_seconds"] = num(wall_seconds);
  summary["config"] = scenario_to_json(sim.config());
  {
    std::ofstream out(fs::path(dir) / "summary.json");
    if (!out) fail(ErrorKind::kIoError, "cannot write summary.json in " + dir);
    out << summary.dump(2) << '\n';
  }
  if (!sim.frames().empty()) {
    const fs::path frames = fs::path(dir) / "frames";
    fs::create_directories(frames, ec);
    if (ec) fail(ErrorKind::kIoError, "cannot create " + frames.string());
    const int res = sim.config().coverage.params.grid_resolution;
    for (std::size_t k = 0; k < sim.frames().size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "density_%04zu.csv", k);
      std::FILE* f = std::fopen((frames / name).string().c_str(), "w");
      if (!f) fail(ErrorKind::kIoError, "cannot write frame " + std::string(name));
      std::fprintf(f, "# t=%.17g\n", sim.frames()[k].t);
      const auto& phi = sim.frames()[k].phi;
      for (int iy = 0; iy < res; ++iy) {
        for (int ix = 0; ix < res; ++ix) {
          std::fprintf(f, "%s%.9g", ix ? "," : "", phi[static_cast<std::size_t>(iy * res + ix)]);
        }
        std::fputc('\n', f);
      }
      std::fclose(f);
    }
  }
  if (!sim.command_log().empty()) write_command_log((fs::path(dir) / "commands.jsonl").string(), sim.command_log());
}

}  // namespace apnet
