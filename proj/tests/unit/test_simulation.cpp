#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "apnet/diagnostics.hpp"
#include "apnet/errors.hpp"
#include "apnet/metrics.hpp"
#include "apnet/scenario.hpp"
#include "apnet/simulation.hpp"
#include "apnet/target.hpp"

using namespace apnet;

namespace {

NetworkParams hex_params(double alpha = 2.0) {
  NetworkParams p;
  p.a = 1.0;
  p.k0 = 2.0;
  p.alpha = alpha;
  p.gamma = 4.0;
  p.sigma = 1.0;
  p.beta = Eigen::VectorXd::Constant(6, 0.5);
  p.sensing_radius = 5.0;
  return p;
}

ScenarioConfig hex_scenario(double duration, double dt = 1e-3) {
  ScenarioConfig cfg;
  cfg.name = "hex";
  cfg.seed = 3;
  cfg.dt = dt;
  cfg.duration = duration;
  cfg.record_stride = 10;
  cfg.node_count = 6;
  cfg.edges = figure1_edges();
  cfg.agent_positions = figure1_positions();
  ChannelConfig ch;
  ch.name = "x";
  ch.network = hex_params();
  ch.initial.kind = InitialSpec::Kind::kUniform;
  ch.initial.low = -1.0;
  ch.initial.high = 1.0;
  cfg.channels.push_back(ch);
  InputSpec in;
  in.position = cfg.agent_positions[2];
  in.values["x"].kind = ValueSpec::Kind::kSinusoid;
  in.values["x"].offset = 2.0;
  in.values["x"].amplitude = 1.0;
  in.values["x"].omega = 1.0;
  cfg.inputs.push_back(in);
  return cfg;
}

ScenarioConfig adaptive_hex(EstimatorLaw law, double duration) {
  ScenarioConfig cfg = hex_scenario(duration);
  cfg.inputs[0].values["x"] = ValueSpec{};
  cfg.inputs[0].values["x"].offset = 3.0;
  AdaptiveParams ap;
  ap.gamma_rate = 10.0;
  ap.mu = 2.0;
  ap.delta_hat_max = 6.0;
  ap.constant_mode = true;
  ap.law = law;
  cfg.channels[0].adaptive = ap;
  cfg.channels[0].uncertainty.kind = UncertaintySpec::Kind::kUniformConstant;
  cfg.channels[0].uncertainty.high = 5.0;
  return cfg;
}

Eigen::VectorXd final_state(ScenarioConfig cfg) {
  Simulation sim(std::move(cfg));
  sim.run();
  return sim.state();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("apnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("zero state is an equilibrium") {
  ScenarioConfig cfg = hex_scenario(1.0);
  cfg.inputs.clear();
  cfg.channels[0].initial = InitialSpec{};
  cfg.channels[0].network.k0 = 1.0;
  Simulation sim(cfg);
  sim.run();
  CHECK(sim.state().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rk4 convergence order") {
  const double t_end = 2.0;
  const Eigen::VectorXd ref = final_state(hex_scenario(t_end, 0.04 / 8.0));
  const double e1 = (final_state(hex_scenario(t_end, 0.04)) - ref).norm();
  const double e2 = (final_state(hex_scenario(t_end, 0.02)) - ref).norm();
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.5);
  CHECK(order < 4.5);
}

TEST_CASE("nominal neighborhood shrinks with alpha") {
  const auto final_error = [](double alpha) {
    ScenarioConfig cfg = hex_scenario(20.0);
    cfg.channels[0].network.alpha = alpha;
    cfg.inputs[0].values["x"] = ValueSpec{};
    cfg.inputs[0].values["x"].offset = 4.0;
    Simulation sim(cfg);
    sim.run();
    const ChannelSample s = sim.sample_channel(0);
    CHECK(s.epsilon == doctest::Approx(4.0));
    return s.consensus_error;
  };
  const double e1 = final_error(1.0);
  const double e10 = final_error(10.0);
  const double e40 = final_error(40.0);
  CHECK(e10 < e1);
  CHECK(e40 < e10);
}

TEST_CASE("identical config and seed give bit-identical traces") {
  ScenarioConfig cfg = adaptive_hex(EstimatorLaw::kConsistent, 2.0);
  Simulation a(cfg), b(cfg);
  a.run();
  b.run();
  REQUIRE(a.trace().rows.size() == b.trace().rows.size());
  CHECK(a.state() == b.state());
  for (std::size_t k = 0; k < a.trace().rows.size(); ++k) {
    CHECK(a.trace().rows[k].channels[0].x == b.trace().rows[k].channels[0].x);
    CHECK(a.trace().rows[k].channels[0].delta_hat == b.trace().rows[k].channels[0].delta_hat);
  }
}

TEST_CASE("duration equal to dt runs one step") {
  ScenarioConfig cfg = hex_scenario(1e-3);
  Simulation sim(cfg);
  sim.run();
  CHECK(sim.step_index() == 1);
  CHECK(sim.trace().rows.size() == 2);
  CHECK(sim.trace().rows.back().t == doctest::Approx(1e-3));
}

TEST_CASE("per-agent and compact nominal rates agree") {
  ScenarioConfig cfg = hex_scenario(0.05);
  Simulation sim(cfg);
  sim.set_cross_check(true);
  sim.run();
  CHECK(sim.cross_checks() == 4 * sim.step_index());
}

TEST_CASE("consistent estimator converges under constant uncertainty") {
  Simulation sim(adaptive_hex(EstimatorLaw::kConsistent, 30.0));
  sim.run();
  const ChannelSample s = sim.sample_channel(0);
  CHECK(s.e_x < 1e-3);
  CHECK(s.e_z < 1e-3);
  CHECK(s.delta_tilde < 1e-3);
}

TEST_CASE("literal estimator law does not settle") {
  Simulation sim(adaptive_hex(EstimatorLaw::kLiteral, 30.0));
  bool diverged = false;
  try {
    sim.run();
    diverged = !(sim.sample_channel(0).e_x < 1.0);
  } catch (const Error& e) {
    diverged = e.kind() == ErrorKind::kNonFiniteState;
  }
  CHECK(diverged);
}

TEST_CASE("exact uncertainty estimate cancels the corruption") {
  ScenarioConfig cfg = adaptive_hex(EstimatorLaw::kConsistent, 5.0);
  cfg.channels[0].uncertainty.kind = UncertaintySpec::Kind::kConstant;
  cfg.channels[0].uncertainty.values = {1.0, 2.0, 0.5, 3.0, 1.5, 2.5};
  ScenarioConfig nominal = hex_scenario(5.0);
  nominal.inputs = cfg.inputs;
  Simulation sim(cfg);
  Simulation ref(nominal);
  const int n = 6;
  const Eigen::Index m = static_cast<Eigen::Index>(figure1_edges().size());

  // x_hat = x, p_hat = p, delta_hat = Delta: the corrected loop is the
  // uncorrupted nominal loop and every estimator error rate vanishes.
  Eigen::VectorXd y = ref.state();
  y.segment(0, n) << 0.3, -0.2, 0.8, 1.1, -0.5, 0.1;
  y.segment(n, n) << 0.2, 0.1, -0.3, 0.0, 0.4, -0.1;
  y.segment(5 * n, m).setLinSpaced(-0.5, 0.5);
  y.segment(5 * n + m, m) = y.segment(5 * n, m);
  Eigen::VectorXd ya = y;
  ya.segment(2 * n, n) = y.segment(0, n);
  ya.segment(3 * n, n) = y.segment(n, n);
  ya.segment(4 * n, n) = Eigen::Map<const Eigen::VectorXd>(cfg.channels[0].uncertainty.values.data(), n);

  const Eigen::VectorXd fa = sim.derivative(0.0, ya, TargetSample{});
  const Eigen::VectorXd fn = ref.derivative(0.0, y, TargetSample{});
  CHECK((fa.segment(0, 2 * n) - fn.segment(0, 2 * n)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fa.segment(5 * n, m) - fn.segment(5 * n, m)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fa.segment(4 * n, n).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fa.segment(2 * n, n) - fa.segment(0, n)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-finite state names the component") {
  ScenarioConfig cfg = hex_scenario(1.0);
  cfg.channels[0].initial.kind = InitialSpec::Kind::kValues;
  cfg.channels[0].initial.values = {1e308, -1e308, 1e308, -1e308, 1e308, -1e308};
  Simulation sim(cfg);
  try {
    sim.run();
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonFiniteState);
    CHECK(std::string(e.what()).find("channel 'x'") != std::string::npos);
  }
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg = hex_scenario(1.0);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(Simulation{cfg}, Error);
  try {
    cfg.validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidConfig);
  }
  cfg.dt = 1e-3;
  cfg.duration = 1e-4;
  CHECK_THROWS_AS(cfg.validate(), Error);

  nlohmann::json j = scenario_to_json(hex_scenario(1.0));
  j["bogus"] = 1;
  CHECK_THROWS_AS(scenario_from_json(j), Error);
}

TEST_CASE("scenario json round trip") {
  const ScenarioConfig a = sec5_default_scenario();
  const ScenarioConfig b = scenario_from_json(scenario_to_json(a));
  CHECK(scenario_to_json(b) == scenario_to_json(a));
  CHECK(b.node_count == 25);
  CHECK(b.channels.size() == 3);
  CHECK(b.channels[2].network.gamma == 30.0);
}

TEST_CASE("scripted trajectory respects the speed limit") {
  TargetConfig t;
  t.mode = TargetConfig::Mode::kScripted;
  t.start = Point2(6.0, 6.0);
  t.initial_dwell = 2.0;
  t.v_max = 0.5;
  t.waypoints = {Waypoint{Point2(13.0, 6.0), 3.0}, Waypoint{Point2(13.0, 13.0), 3.0}};
  ScriptedTrajectory traj(t);
  double peak = 0.0;
  Point2 prev = traj.sample(0.0).position;
  const double h = 1e-3;
  for (double s = h; s < traj.total_time(); s += h) {
    const TargetSample x = traj.sample(s);
    peak = std::max(peak, x.speed);
    CHECK((x.position - prev).norm() / h <= 0.5 + 1e-6);
    prev = x.position;
  }
  CHECK(peak == doctest::Approx(0.5).epsilon(1e-3));
  REQUIRE(traj.dwells().size() == 2);
  CHECK(traj.dwells()[0].position.isApprox(Point2(13.0, 6.0)));
  CHECK(traj.sample(traj.dwells()[0].start + 1.0).speed == 0.0);
  CHECK(traj.sample(1e6).position.isApprox(Point2(13.0, 13.0)));
}

TEST_CASE("external target speed clamp, decay and domain clamp") {
  ExternalTarget tgt(Point2(5.0, 5.0), 1.0, 0.2, Rect{0.0, 20.0, 0.0, 20.0});
  tgt.command(0.0, Point2(5.0, 5.0), 1);
  tgt.command(0.1, Point2(6.0, 5.0), 2);
  CHECK(tgt.raw_speed() == doctest::Approx(10.0));
  CHECK(tgt.sample(0.1).speed == doctest::Approx(1.0));
  CHECK(tgt.sample(1.1).speed == 0.0);

  const auto stale = tgt.command(0.2, Point2(1.0, 1.0), 2);
  CHECK(stale.stale);
  CHECK(stale.seq == 2);
  CHECK(tgt.commanded().isApprox(Point2(6.0, 5.0)));

  const auto clamped = tgt.command(0.3, Point2(25.0, -3.0), 3);
  CHECK(clamped.clamped);
  CHECK(clamped.applied.isApprox(Point2(20.0, 0.0)));

  const Point2 before = tgt.sample(0.3).position;
  tgt.advance(0.01);
  CHECK((tgt.sample(0.31).position - before).norm() <= 0.01 + 1e-12);
}

TEST_CASE("replaying a command log reproduces the trace") {
  ScenarioConfig cfg = hex_scenario(1.0);
  cfg.target.mode = TargetConfig::Mode::kExternal;
  cfg.target.start = Point2(10.0, 10.0);
  cfg.inputs[0].follows_target = true;
  cfg.inputs[0].values["x"] = ValueSpec{};
  cfg.inputs[0].values["x"].kind = ValueSpec::Kind::kTargetX;

  Simulation live(cfg);
  std::int64_t seq = 0;
  while (!live.finished()) {
    if (live.step_index() % 37 == 0) {
      const double s = live.time();
      live.command_target(Point2(10.0 + 3.0 * std::sin(s), 10.0 + 3.0 * std::cos(s)), ++seq);
    }
    live.step();
  }
  const auto dir = temp_dir("replay");
  const std::string log = (dir / "commands.jsonl").string();
  write_command_log(log, live.command_log());
  REQUIRE(read_command_log(log).size() == live.command_log().size());

  ScenarioConfig rcfg = cfg;
  rcfg.target.mode = TargetConfig::Mode::kReplay;
  rcfg.target.replay_log = log;
  Simulation replay(rcfg);
  replay.run();
  CHECK(replay.state() == live.state());
  REQUIRE(replay.trace().rows.size() == live.trace().rows.size());
  for (std::size_t k = 0; k < live.trace().rows.size(); ++k) {
    CHECK(replay.trace().rows[k].channels[0].x == live.trace().rows[k].channels[0].x);
  }
}

TEST_CASE("trace csv round trip") {
  Simulation sim(adaptive_hex(EstimatorLaw::kConsistent, 0.5));
  sim.run();
  const auto dir = temp_dir("csv");
  const std::string path = (dir / "trace.csv").string();
  write_trace_csv(sim.trace(), path);
  const CsvTable t = read_csv(path);
  CHECK(t.header == trace_csv_header(sim.trace()));
  REQUIRE(t.rows.size() == sim.trace().rows.size());
  const auto col = [&](const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    REQUIRE(it != t.header.end());
    return static_cast<std::size_t>(it - t.header.begin());
  };
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const TraceRow& r = sim.trace().rows[k];
    CHECK(std::abs(t.rows[k][col("t")] - r.t) <= 1e-12);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(t.rows[k][col("x.x." + std::to_string(i))] - r.channels[0].x(i)) <= 1e-12);
      CHECK(std::abs(t.rows[k][col("x.delta_hat." + std::to_string(i))] - r.channels[0].delta_hat(i)) <= 1e-12);
    }
    CHECK(std::abs(t.rows[k][col("x.V")] - r.channels[0].lyapunov) <= 1e-12);
  }
}

TEST_CASE("empty trace writes a header-only csv") {
  Trace tr;
  tr.channel_names = {"x"};
  tr.node_count = 3;
  const auto dir = temp_dir("empty");
  const std::string path = (dir / "trace.csv").string();
  write_trace_csv(tr, path);
  const CsvTable t = read_csv(path);
  CHECK(t.header == trace_csv_header(tr));
  CHECK(t.rows.empty());
}

TEST_CASE("summary contains bound satisfaction booleans") {
  Simulation sim(adaptive_hex(EstimatorLaw::kConsistent, 3.0));
  sim.run();
  const RunReport rep = evaluate_run(sim);
  const auto dir = temp_dir("summary");
  export_metrics(sim, rep, dir.string());
  std::ifstream in(dir / "summary.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  const auto& ch = j.at("channels").at(0);
  CHECK(ch.at("theorem2").at("satisfied").at("e_x").is_boolean());
  CHECK(ch.at("theorem2").at("satisfied").at("e_z").is_boolean());
  CHECK(ch.at("theorem2").at("satisfied").at("delta_tilde").is_boolean());
  CHECK(ch.contains("theorem2"));
  CHECK(std::filesystem::exists(dir / "trace.csv"));
}

TEST_CASE("export to an unwritable path raises IoError") {
  Simulation sim(hex_scenario(0.01));
  sim.run();
  const RunReport rep = evaluate_run(sim);
  const auto dir = temp_dir("blocked");
  const auto file = dir / "file";
  std::ofstream(file) << "x";
  try {
    export_metrics(sim, rep, (file / "sub").string());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIoError);
  }
}

TEST_CASE("theorem 2 bound examples") {
  const Graph g = Graph::build(6, figure1_edges());
  AdaptiveParams ap;
  ap.gamma_rate = 5.0;
  ap.mu = 1.5;
  ap.delta_hat_max = 4.0;
  const NetworkParams p = hex_params();

  const AdaptiveBounds constant = theorem2_bounds(ap, p, g, 3.0, 0.0);
  CHECK(constant.alpha2 == 0.0);
  CHECK(constant.eta1 == 0.0);
  CHECK(constant.eta2 == doctest::Approx(7.0));

  const AdaptiveBounds b1 = theorem2_bounds(ap, p, g, 3.0, 0.5);
  ap.gamma_rate *= 2.0;
  const AdaptiveBounds b2 = theorem2_bounds(ap, p, g, 3.0, 0.5);
  const double term1 = b1.lyapunov_level - b1.gamma1 * b1.eta1 * b1.eta1;
  const double term2 = b2.lyapunov_level - b2.gamma1 * b2.eta1 * b2.eta1;
  CHECK(term2 == doctest::Approx(term1 / 2.0));
}

TEST_CASE("theorem 1 bound examples") {
  const Graph g = Graph::build(6, figure1_edges());
  NetworkParams p = hex_params(5.0);
  p.k0 = 1.0;
  NominalBoundInputs in{2.0, 0.0, 0.3, 0.1};
  const NominalBound b = theorem1_bound(p, g, in);
  const double lam = b.lambda_min_f;
  const double bn = b.beta_norm;
  const double expect_first = in.epsilon_bar * bn * (p.alpha * p.alpha * bn) / (p.alpha * p.alpha * lam * lam);
  const double expect_second = p.alpha * p.alpha / (std::pow(p.gamma, 3) * p.sigma * p.sigma) *
                               std::pow(p.gamma * p.sigma * in.p1_bar + in.p2_bar, 2);
  CHECK(b.first_term == doctest::Approx(expect_first).epsilon(1e-12));
  CHECK(b.second_term == doctest::Approx(expect_second).epsilon(1e-12));

  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    NetworkParams q = hex_params(alpha);
    q.k0 = 1.0;
    const NominalBound nb = theorem1_bound(q, g, NominalBoundInputs{2.0, 0.5, 0.3, 0.1});
    CHECK(nb.first_term <= prev);
    prev = nb.first_term;
  }
}

TEST_CASE("lyapunov value examples") {
  const Eigen::VectorXd z6 = Eigen::VectorXd::Zero(6);
  const Eigen::VectorXd z7 = Eigen::VectorXd::Zero(7);
  CHECK(lyapunov_value(z6, z7, z6, 4.0, 10.0) == 0.0);
  Eigen::VectorXd e = z6;
  e(0) = 1.0;
  CHECK(lyapunov_value(e, z7, z6, 4.0, 10.0) == doctest::Approx(0.5));
}

TEST_CASE("transient cutoff requires the hold window") {
  const std::vector<double> t{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const std::vector<double> v{5.0, 0.5, 2.0, 0.5, 0.4, 0.3, 0.2};
  const auto cut = transient_cutoff(t, v, 1.0);
  REQUIRE(cut);
  CHECK(*cut == 1.5);
  CHECK(max_after(t, v, 1.5) == 0.5);
  CHECK_FALSE(transient_cutoff(t, v, 0.1));
}
