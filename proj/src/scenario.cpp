#include "apnet/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "apnet/errors.hpp"
#include "apnet/graph.hpp"

namespace apnet {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::kInvalidConfig, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) bad("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

Point2 point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where + " must be [x, y]");
  return Point2(j[0].get<double>(), j[1].get<double>());
}

json point_to(const Point2& p) { return json::array({p.x(), p.y()}); }

std::pair<double, double> range_from(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), j.get<double>()};
  if (!j.is_array() || j.size() != 2) bad(where + " must be a number or [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

ValueSpec value_from(const json& j, const std::string& where) {
  ValueSpec v;
  if (j.is_number()) {
    v.offset = j.get<double>();
    return v;
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "target.x") v.kind = ValueSpec::Kind::kTargetX;
    else if (s == "target.y") v.kind = ValueSpec::Kind::kTargetY;
    else if (s == "target.speed") v.kind = ValueSpec::Kind::kTargetSpeed;
    else bad(where + ": unknown value source '" + s + "'");
    return v;
  }
  check_keys(j, where, {"offset", "amplitude", "omega", "phase"});
  v.kind = ValueSpec::Kind::kSinusoid;
  v.offset = get_or(j, "offset", 0.0);
  v.amplitude = get_or(j, "amplitude", 0.0);
  v.omega = get_or(j, "omega", 0.0);
  v.phase = get_or(j, "phase", 0.0);
  return v;
}

json value_to(const ValueSpec& v) {
  switch (v.kind) {
    case ValueSpec::Kind::kConstant: return v.offset;
    case ValueSpec::Kind::kSinusoid:
      return json{{"offset", v.offset}, {"amplitude", v.amplitude}, {"omega", v.omega}, {"phase", v.phase}};
    case ValueSpec::Kind::kTargetX: return "target.x";
    case ValueSpec::Kind::kTargetY: return "target.y";
    case ValueSpec::Kind::kTargetSpeed: return "target.speed";
  }
  return nullptr;
}

UncertaintySpec uncertainty_from(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "values", "low", "high", "amplitude", "omega", "phase", "period", "ramp",
                        "levels"});
  UncertaintySpec u;
  const std::string kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") {
    u.kind = UncertaintySpec::Kind::kNone;
  } else if (kind == "constant") {
    u.kind = UncertaintySpec::Kind::kConstant;
    u.values = j.at("values").get<std::vector<double>>();
  } else if (kind == "uniform_constant") {
    u.kind = UncertaintySpec::Kind::kUniformConstant;
    u.low = j.at("low").get<double>();
    u.high = j.at("high").get<double>();
  } else if (kind == "sinusoidal") {
    u.kind = UncertaintySpec::Kind::kSinusoidal;
    u.amplitude = range_from(j.at("amplitude"), where + ".amplitude");
    u.omega = range_from(j.at("omega"), where + ".omega");
    u.phase = j.contains("phase") ? range_from(j.at("phase"), where + ".phase")
                                  : std::pair{0.0, 2.0 * std::numbers::pi};
  } else if (kind == "smoothed_steps") {
    u.kind = UncertaintySpec::Kind::kSmoothedSteps;
    u.low = j.at("low").get<double>();
    u.high = j.at("high").get<double>();
    u.period = get_or(j, "period", 10.0);
    u.ramp = get_or(j, "ramp", 2.0);
    u.levels = get_or(j, "levels", 4);
  } else {
    bad(where + ": unknown uncertainty kind '" + kind + "'");
  }
  return u;
}

json uncertainty_to(const UncertaintySpec& u) {
  switch (u.kind) {
    case UncertaintySpec::Kind::kNone: return json{{"kind", "none"}};
    case UncertaintySpec::Kind::kConstant: return json{{"kind", "constant"}, {"values", u.values}};
    case UncertaintySpec::Kind::kUniformConstant:
      return json{{"kind", "uniform_constant"}, {"low", u.low}, {"high", u.high}};
    case UncertaintySpec::Kind::kSinusoidal:
      return json{{"kind", "sinusoidal"},
                  {"amplitude", json::array({u.amplitude.first, u.amplitude.second})},
                  {"omega", json::array({u.omega.first, u.omega.second})},
                  {"phase", json::array({u.phase.first, u.phase.second})}};
    case UncertaintySpec::Kind::kSmoothedSteps:
      return json{{"kind", "smoothed_steps"}, {"low", u.low},       {"high", u.high},
                  {"period", u.period},       {"ramp", u.ramp},     {"levels", u.levels}};
  }
  return nullptr;
}

InitialSpec initial_from(const json& j, const std::string& where) {
  check_keys(j, where, {"x", "x_hat_offset", "delta_hat"});
  InitialSpec s;
  if (j.contains("x")) {
    const json& x = j.at("x");
    if (x.is_string()) {
      if (x.get<std::string>() != "zero") bad(where + ".x: expected \"zero\"");
    } else if (x.is_array()) {
      s.kind = InitialSpec::Kind::kValues;
      s.values = x.get<std::vector<double>>();
    } else {
      check_keys(x, where + ".x", {"uniform"});
      s.kind = InitialSpec::Kind::kUniform;
      std::tie(s.low, s.high) = range_from(x.at("uniform"), where + ".x.uniform");
    }
  }
  s.x_hat_offset = get_or(j, "x_hat_offset", 0.0);
  s.delta_hat = get_or(j, "delta_hat", 0.0);
  return s;
}

json initial_to(const InitialSpec& s) {
  json j;
  switch (s.kind) {
    case InitialSpec::Kind::kZero: j["x"] = "zero"; break;
    case InitialSpec::Kind::kValues: j["x"] = s.values; break;
    case InitialSpec::Kind::kUniform: j["x"] = json{{"uniform", json::array({s.low, s.high})}}; break;
  }
  j["x_hat_offset"] = s.x_hat_offset;
  j["delta_hat"] = s.delta_hat;
  return j;
}

NetworkParams network_from(const json& j, int n, const std::string& where) {
  check_keys(j, where, {"a", "k0", "alpha", "gamma", "sigma", "beta", "sensing_radius"});
  NetworkParams p;
  p.a = j.at("a").get<double>();
  p.k0 = j.at("k0").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.sensing_radius = j.at("sensing_radius").get<double>();
  const json& b = j.at("beta");
  if (b.is_number()) {
    p.beta = Eigen::VectorXd::Constant(n, b.get<double>());
  } else {
    const auto v = b.get<std::vector<double>>();
    p.beta = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return p;
}

json network_to(const NetworkParams& p) {
  json beta;
  if (p.beta.size() > 0 && (p.beta.array() == p.beta(0)).all()) {
    beta = p.beta(0);
  } else {
    beta = std::vector<double>(p.beta.data(), p.beta.data() + p.beta.size());
  }
  return json{{"a", p.a},         {"k0", p.k0},         {"alpha", p.alpha}, {"gamma", p.gamma},
              {"sigma", p.sigma}, {"beta", beta},       {"sensing_radius", p.sensing_radius}};
}

AdaptiveParams adaptive_from(const json& j, const std::string& where) {
  check_keys(j, where, {"Gamma", "mu", "delta_hat_max", "nu_fraction", "mode", "estimator_law"});
  AdaptiveParams a;
  a.gamma_rate = j.at("Gamma").get<double>();
  a.mu = j.at("mu").get<double>();
  a.delta_hat_max = j.at("delta_hat_max").get<double>();
  a.nu_fraction = get_or(j, "nu_fraction", 0.05);
  const std::string mode = get_or<std::string>(j, "mode", "projection");
  if (mode == "constant") a.constant_mode = true;
  else if (mode != "projection") bad(where + ".mode must be \"projection\" or \"constant\"");
  a.law = parse_estimator_law(get_or<std::string>(j, "estimator_law", "consistent"));
  return a;
}

json adaptive_to(const AdaptiveParams& a) {
  return json{{"Gamma", a.gamma_rate},
              {"mu", a.mu},
              {"delta_hat_max", a.delta_hat_max},
              {"nu_fraction", a.nu_fraction},
              {"mode", a.constant_mode ? "constant" : "projection"},
              {"estimator_law", std::string(to_string(a.law))}};
}

}  // namespace

double ValueSpec::bound() const {
  switch (kind) {
    case Kind::kConstant: return std::abs(offset);
    case Kind::kSinusoid: return std::abs(offset) + std::abs(amplitude);
    default: return 0.0;
  }
}

double ValueSpec::rate_bound() const {
  return kind == Kind::kSinusoid ? std::abs(amplitude * omega) : 0.0;
}

UncertaintyModel UncertaintySpec::build(int n, Rng& rng) const {
  const auto draw = [&](double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
  };
  switch (kind) {
    case Kind::kNone: return UncertaintyModel::none(n);
    case Kind::kConstant: {
      if (static_cast<int>(values.size()) != n) {
        fail(ErrorKind::kDimensionMismatch, "constant uncertainty needs one value per agent");
      }
      return UncertaintyModel::constant(Eigen::Map<const Eigen::VectorXd>(values.data(), n));
    }
    case Kind::kUniformConstant: return UncertaintyModel::constant(draw(low, high));
    case Kind::kSinusoidal: {
      Eigen::VectorXd amp = draw(amplitude.first, amplitude.second);
      Eigen::VectorXd om = draw(omega.first, omega.second);
      Eigen::VectorXd ph = draw(phase.first, phase.second);
      return UncertaintyModel::sinusoidal(std::move(amp), std::move(om), std::move(ph));
    }
    case Kind::kSmoothedSteps: {
      Eigen::MatrixXd lv(n, levels);
      for (int k = 0; k < levels; ++k) lv.col(k) = draw(low, high);
      return UncertaintyModel::smoothed_steps(std::move(lv), period, ramp);
    }
  }
  return UncertaintyModel::none(n);
}

Eigen::VectorXd InitialSpec::build(int n, Rng& rng) const {
  switch (kind) {
    case Kind::kZero: return Eigen::VectorXd::Zero(n);
    case Kind::kValues:
      if (static_cast<int>(values.size()) != n) {
        fail(ErrorKind::kDimensionMismatch, "initial state needs one value per agent");
      }
      return Eigen::Map<const Eigen::VectorXd>(values.data(), n);
    case Kind::kUniform: {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = rng.uniform(low, high);
      return v;
    }
  }
  return Eigen::VectorXd::Zero(n);
}

long ScenarioConfig::step_count() const { return std::lround(duration / dt); }

int ScenarioConfig::channel_index(const std::string& channel) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].name == channel) return static_cast<int>(c);
  }
  return -1;
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be positive");
  if (!(duration >= dt * (1.0 - 1e-9)) || !std::isfinite(duration)) bad("duration must be at least dt");
  if (record_stride < 1) bad("record_stride must be >= 1");
  if (node_count < 2) bad("graph needs at least two nodes");
  (void)Graph::build(node_count, edges);
  if (static_cast<int>(agent_positions.size()) != node_count) {
    bad("agent positions must list one point per graph node");
  }
  if (!(domain.x_hi > domain.x_lo) || !(domain.y_hi > domain.y_lo)) bad("domain must have positive extent");
  if (channels.empty()) bad("at least one channel is required");
  std::set<std::string> names;
  for (const auto& ch : channels) {
    if (ch.name.empty()) bad("channel name must not be empty");
    if (!names.insert(ch.name).second) bad("duplicate channel '" + ch.name + "'");
    ch.network.validate(node_count);
    if (ch.adaptive) ch.adaptive->validate();
    if (ch.uncertainty.kind == UncertaintySpec::Kind::kConstant &&
        static_cast<int>(ch.uncertainty.values.size()) != node_count) {
      bad("channel '" + ch.name + "': constant uncertainty needs one value per agent");
    }
    if (ch.initial.kind == InitialSpec::Kind::kValues &&
        static_cast<int>(ch.initial.values.size()) != node_count) {
      bad("channel '" + ch.name + "': initial state needs one value per agent");
    }
  }
  if (static_cast<int>(inputs.size()) > node_count) bad("more inputs than agents");
  for (const auto& in : inputs) {
    if (in.follows_target && target.mode == TargetConfig::Mode::kNone) {
      bad("input follows the target but no target is configured");
    }
    for (const auto& ch : channels) {
      const auto it = in.values.find(ch.name);
      if (it == in.values.end()) bad("input lacks a value for channel '" + ch.name + "'");
      if (it->second.kind != ValueSpec::Kind::kConstant && it->second.kind != ValueSpec::Kind::kSinusoid &&
          target.mode == TargetConfig::Mode::kNone) {
        bad("target-driven input value without a target");
      }
    }
    for (const auto& [key, v] : in.values) {
      if (!names.contains(key)) bad("input value for unknown channel '" + key + "'");
    }
  }
  if (target.mode != TargetConfig::Mode::kNone) {
    if (!(target.v_max > 0.0)) bad("target.v_max must be positive");
    if (!(target.speed_window > 0.0)) bad("target.speed_window must be positive");
    if (!domain.contains(target.start, 1e-9)) bad("target.start lies outside the domain");
    for (const auto& w : target.waypoints) {
      if (!domain.contains(w.position, 1e-9)) bad("waypoint outside the domain");
      if (w.dwell < 0.0) bad("negative dwell");
    }
    if (target.initial_dwell < 0.0) bad("negative initial dwell");
    if (target.mode == TargetConfig::Mode::kReplay && target.replay_log.empty()) {
      bad("replay mode needs target.replay_log");
    }
  }
  if (coverage.enabled) {
    coverage.params.validate();
    domain2d().validate();
    if (!(coverage.update_interval >= dt * (1.0 - 1e-9))) bad("coverage.update_interval must be >= dt");
    if (coverage.initial_density < 0.0) bad("coverage.initial_density must be >= 0");
    for (const auto* n : {&coverage.estimate_x, &coverage.estimate_y, &coverage.estimate_speed}) {
      if (channel_index(*n) < 0) bad("coverage estimate channel '" + *n + "' does not exist");
    }
    for (const auto& p : agent_positions) {
      if (!domain.contains(p, 1e-9)) bad("agent position outside the domain");
    }
  }
  if (output.frame_interval < 0.0) bad("output.frame_interval must be >= 0");
}

ScenarioConfig scenario_from_json(const json& j) {
  try {
    check_keys(j, "scenario", {"name", "seed", "dt", "duration", "record_stride", "graph", "agents", "domain",
                               "channels", "inputs", "target", "coverage", "output"});
    ScenarioConfig cfg;
    cfg.name = get_or<std::string>(j, "name", "scenario");
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.dt = get_or(j, "dt", 1e-3);
    cfg.duration = j.at("duration").get<double>();
    cfg.record_stride = get_or(j, "record_stride", 10);

    const json& g = j.at("graph");
    check_keys(g, "graph", {"nodes", "edges", "grid"});
    if (g.contains("grid")) {
      const auto rc = g.at("grid").get<std::vector<int>>();
      if (rc.size() != 2) bad("graph.grid must be [rows, cols]");
      cfg.node_count = rc[0] * rc[1];
      cfg.edges = grid_edges(rc[0], rc[1]);
    } else {
      cfg.node_count = g.at("nodes").get<int>();
      for (const auto& e : g.at("edges")) {
        if (!e.is_array() || e.size() != 2) bad("edges must be [i, j] pairs");
        cfg.edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
      }
    }

    const json& a = j.at("agents");
    check_keys(a, "agents", {"positions", "grid"});
    if (a.contains("grid")) {
      const json& ag = a.at("grid");
      check_keys(ag, "agents.grid", {"rows", "cols", "origin", "spacing"});
      const int rows = ag.at("rows").get<int>(), cols = ag.at("cols").get<int>();
      const Point2 origin = point_from(ag.at("origin"), "agents.grid.origin");
      const double spacing = ag.at("spacing").get<double>();
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) cfg.agent_positions.push_back(origin + spacing * Point2(c, r));
      }
    } else {
      for (const auto& p : a.at("positions")) cfg.agent_positions.push_back(point_from(p, "agents.positions"));
    }

    if (j.contains("domain")) {
      const auto d = j.at("domain").get<std::vector<double>>();
      if (d.size() != 4) bad("domain must be [x_lo, x_hi, y_lo, y_hi]");
      cfg.domain = Rect{d[0], d[1], d[2], d[3]};
    }

    for (const auto& c : j.at("channels")) {
      check_keys(c, "channel", {"name", "network", "adaptive", "uncertainty", "initial"});
      ChannelConfig ch;
      ch.name = c.at("name").get<std::string>();
      const std::string where = "channel '" + ch.name + "'";
      ch.network = network_from(c.at("network"), cfg.node_count, where + ".network");
      if (c.contains("adaptive") && !c.at("adaptive").is_null()) {
        ch.adaptive = adaptive_from(c.at("adaptive"), where + ".adaptive");
      }
      if (c.contains("uncertainty")) ch.uncertainty = uncertainty_from(c.at("uncertainty"), where + ".uncertainty");
      if (c.contains("initial")) ch.initial = initial_from(c.at("initial"), where + ".initial");
      cfg.channels.push_back(std::move(ch));
    }

    if (j.contains("inputs")) {
      for (const auto& in : j.at("inputs")) {
        check_keys(in, "input", {"position", "follow", "values"});
        InputSpec spec;
        if (in.contains("follow")) {
          if (in.at("follow").get<std::string>() != "target") bad("input.follow must be \"target\"");
          spec.follows_target = true;
        } else {
          spec.position = point_from(in.at("position"), "input.position");
        }
        for (const auto& [key, value] : in.at("values").items()) {
          spec.values[key] = value_from(value, "input.values." + key);
        }
        cfg.inputs.push_back(std::move(spec));
      }
    }

    if (j.contains("target")) {
      const json& t = j.at("target");
      check_keys(t, "target", {"mode", "start", "initial_dwell", "waypoints", "v_max", "speed_window", "replay_log"});
      const std::string mode = get_or<std::string>(t, "mode", "none");
      if (mode == "none") cfg.target.mode = TargetConfig::Mode::kNone;
      else if (mode == "scripted") cfg.target.mode = TargetConfig::Mode::kScripted;
      else if (mode == "external") cfg.target.mode = TargetConfig::Mode::kExternal;
      else if (mode == "replay") cfg.target.mode = TargetConfig::Mode::kReplay;
      else bad("target.mode must be none, scripted, external or replay");
      if (t.contains("start")) cfg.target.start = point_from(t.at("start"), "target.start");
      cfg.target.initial_dwell = get_or(t, "initial_dwell", 0.0);
      cfg.target.v_max = get_or(t, "v_max", 1.0);
      cfg.target.speed_window = get_or(t, "speed_window", 0.2);
      cfg.target.replay_log = get_or<std::string>(t, "replay_log", "");
      if (t.contains("waypoints")) {
        for (const auto& w : t.at("waypoints")) {
          check_keys(w, "waypoint", {"position", "dwell"});
          cfg.target.waypoints.push_back(
              Waypoint{point_from(w.at("position"), "waypoint.position"), get_or(w, "dwell", 0.0)});
        }
      }
    }

    if (j.contains("coverage")) {
      const json& c = j.at("coverage");
      check_keys(c, "coverage", {"enabled", "grid_resolution", "bump_radius", "decay", "phi_max", "kappa",
                                 "speed_limit", "dgdo", "quadrature", "fd_step", "mass_floor",
                                 "update_interval", "initial_density", "estimate"});
      auto& cv = cfg.coverage;
      cv.enabled = get_or(c, "enabled", true);
      auto& p = cv.params;
      p.grid_resolution = get_or(c, "grid_resolution", p.grid_resolution);
      p.bump_radius = get_or(c, "bump_radius", p.bump_radius);
      p.decay = get_or(c, "decay", p.decay);
      p.phi_max = get_or(c, "phi_max", p.phi_max);
      p.kappa = get_or(c, "kappa", p.kappa);
      p.speed_limit = get_or(c, "speed_limit", p.speed_limit);
      if (c.contains("dgdo")) p.dgdo_mode = parse_jacobian_mode(c.at("dgdo").get<std::string>());
      if (c.contains("quadrature")) p.quadrature = parse_quadrature(c.at("quadrature").get<std::string>());
      p.fd_step = get_or(c, "fd_step", p.fd_step);
      p.mass_floor = get_or(c, "mass_floor", p.mass_floor);
      cv.update_interval = get_or(c, "update_interval", cv.update_interval);
      cv.initial_density = get_or(c, "initial_density", cv.initial_density);
      if (c.contains("estimate")) {
        const json& e = c.at("estimate");
        check_keys(e, "coverage.estimate", {"x", "y", "speed"});
        cv.estimate_x = get_or<std::string>(e, "x", cv.estimate_x);
        cv.estimate_y = get_or<std::string>(e, "y", cv.estimate_y);
        cv.estimate_speed = get_or<std::string>(e, "speed", cv.estimate_speed);
      }
    }

    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, "output", {"dir", "frame_interval"});
      cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
      cfg.output.frame_interval = get_or(o, "frame_interval", 0.0);
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    bad(std::string("malformed scenario: ") + e.what());
  }
}

json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["dt"] = cfg.dt;
  j["duration"] = cfg.duration;
  j["record_stride"] = cfg.record_stride;
  json edges = json::array();
  for (const auto& [u, v] : cfg.edges) edges.push_back(json::array({u + 1, v + 1}));
  j["graph"] = json{{"nodes", cfg.node_count}, {"edges", edges}};
  json pos = json::array();
  for (const auto& p : cfg.agent_positions) pos.push_back(point_to(p));
  j["agents"] = json{{"positions", pos}};
  j["domain"] = json::array({cfg.domain.x_lo, cfg.domain.x_hi, cfg.domain.y_lo, cfg.domain.y_hi});
  json chans = json::array();
  for (const auto& ch : cfg.channels) {
    json c{{"name", ch.name},
           {"network", network_to(ch.network)},
           {"uncertainty", uncertainty_to(ch.uncertainty)},
           {"initial", initial_to(ch.initial)}};
    if (ch.adaptive) c["adaptive"] = adaptive_to(*ch.adaptive);
    chans.push_back(std::move(c));
  }
  j["channels"] = chans;
  json ins = json::array();
  for (const auto& in : cfg.inputs) {
    json e;
    if (in.follows_target) e["follow"] = "target";
    else e["position"] = point_to(in.position);
    json vals = json::object();
    for (const auto& [k, v] : in.values) vals[k] = value_to(v);
    e["values"] = vals;
    ins.push_back(std::move(e));
  }
  j["inputs"] = ins;
  const char* modes[] = {"none", "scripted", "external", "replay"};
  json wps = json::array();
  for (const auto& w : cfg.target.waypoints) wps.push_back(json{{"position", point_to(w.position)}, {"dwell", w.dwell}});
  j["target"] = json{{"mode", modes[static_cast<int>(cfg.target.mode)]},
                     {"start", point_to(cfg.target.start)},
                     {"initial_dwell", cfg.target.initial_dwell},
                     {"waypoints", wps},
                     {"v_max", cfg.target.v_max},
                     {"speed_window", cfg.target.speed_window},
                     {"replay_log", cfg.target.replay_log}};
  const auto& cv = cfg.coverage;
  j["coverage"] = json{{"enabled", cv.enabled},
                       {"grid_resolution", cv.params.grid_resolution},
                       {"bump_radius", cv.params.bump_radius},
                       {"decay", cv.params.decay},
                       {"phi_max", cv.params.phi_max},
                       {"kappa", cv.params.kappa},
                       {"speed_limit", cv.params.speed_limit},
                       {"dgdo", std::string(to_string(cv.params.dgdo_mode))},
                       {"quadrature", std::string(to_string(cv.params.quadrature))},
                       {"fd_step", cv.params.fd_step},
                       {"mass_floor", cv.params.mass_floor},
                       {"update_interval", cv.update_interval},
                       {"initial_density", cv.initial_density},
                       {"estimate", {{"x", cv.estimate_x}, {"y", cv.estimate_y}, {"speed", cv.estimate_speed}}}};
  j["output"] = json{{"dir", cfg.output.dir}, {"frame_interval", cfg.output.frame_interval}};
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

std::vector<std::pair<int, int>> figure1_edges() {
  return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 4}};
}

std::vector<Point2> figure1_positions() {
  std::vector<Point2> pts;
  for (int i = 0; i < 6; ++i) {
    const double th = 2.0 * std::numbers::pi * i / 6.0;
    pts.emplace_back(10.0 + 6.0 * std::cos(th), 10.0 + 6.0 * std::sin(th));
  }
  return pts;
}

ScenarioConfig sec5_default_scenario() {
  ScenarioConfig cfg;
  cfg.name = "sec5";
  cfg.seed = 7;
  cfg.dt = 1e-3;
  cfg.duration = 150.0;
  cfg.record_stride = 50;
  cfg.node_count = 25;
  cfg.edges = grid_edges(5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) cfg.agent_positions.emplace_back(2.0 + 4.0 * c, 2.0 + 4.0 * r);
  }
  cfg.domain = Rect{0.0, 20.0, 0.0, 20.0};

  const auto channel = [&](const std::string& name, double alpha, double gamma, double sigma, double rate,
                           double hi, double dhat_max) {
    ChannelConfig ch;
    ch.name = name;
    ch.network.a = 1.0;
    ch.network.k0 = 1.0;
    ch.network.alpha = alpha;
    ch.network.gamma = gamma;
    ch.network.sigma = sigma;
    ch.network.beta = Eigen::VectorXd::Constant(25, 0.001);
    ch.network.sensing_radius = 3.5;
    AdaptiveParams ap;
    ap.gamma_rate = rate;
    ap.mu = 1.5;
    ap.delta_hat_max = dhat_max;
    ch.adaptive = ap;
    ch.uncertainty.kind = UncertaintySpec::Kind::kUniformConstant;
    ch.uncertainty.low = 0.0;
    ch.uncertainty.high = hi;
    return ch;
  };
  cfg.channels.push_back(channel("x", 20.0, 22.0, 0.0045, 5.0, 5.0, 6.0));
  cfg.channels.push_back(channel("y", 20.0, 22.0, 0.0045, 5.0, 5.0, 6.0));
  cfg.channels.push_back(channel("v", 30.0, 30.0, 0.0033, 8.0, 1.0, 1.2));

  InputSpec human;
  human.follows_target = true;
  human.values["x"].kind = ValueSpec::Kind::kTargetX;
  human.values["y"].kind = ValueSpec::Kind::kTargetY;
  human.values["v"].kind = ValueSpec::Kind::kTargetSpeed;
  cfg.inputs.push_back(human);

  cfg.target.mode = TargetConfig::Mode::kScripted;
  cfg.target.start = Point2(6.0, 6.0);
  cfg.target.initial_dwell = 10.0;
  cfg.target.v_max = 0.5;
  cfg.target.waypoints = {Waypoint{Point2(13.0, 6.0), 25.0}, Waypoint{Point2(13.0, 13.0), 25.0},
                          Waypoint{Point2(6.0, 13.0), 25.0}};

  cfg.coverage.enabled = true;
  cfg.coverage.params.bump_radius = 3.0;
  cfg.coverage.params.decay = 0.3;
  cfg.coverage.params.kappa = 5.0;
  cfg.coverage.initial_density = 0.01;
  cfg.output.dir = "out/sec5";
  cfg.output.frame_interval = 10.0;
  return cfg;
}

}  // namespace apnet
