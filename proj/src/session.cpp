#include "apnet/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "apnet/diagnostics.hpp"
#include "apnet/errors.hpp"
#include "apnet/metrics.hpp"

namespace apnet {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point(const Point2& p) { return json::array({num(p.x()), num(p.y())}); }

json stats(const Eigen::VectorXd& v) {
  if (v.size() == 0 || !v.allFinite()) return json{{"mean", nullptr}, {"min", nullptr}, {"max", nullptr}};
  return json{{"mean", v.mean()}, {"min", v.minCoeff()}, {"max", v.maxCoeff()}};
}

json bound_entry(double value, double bound) {
  return json{{"value", num(value)}, {"bound", num(bound)}, {"ok", std::isfinite(value) && value <= bound}};
}

void collect_paths(const json& j, const std::string& prefix, std::set<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string p = prefix.empty() ? it.key() : prefix + "." + it.key();
      out.insert(p);
      collect_paths(it.value(), p, out);
    }
  } else if (j.is_array()) {
    for (const auto& e : j) collect_paths(e, prefix + "[]", out);
  }
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kIdle: return "idle";
    case RunStatus::kRunning: return "running";
    case RunStatus::kPaused: return "paused";
    case RunStatus::kFinished: return "finished";
    case RunStatus::kStopped: return "stopped";
  }
  return "unknown";
}

TargetCommand parse_target_command(const json& j) {
  TargetCommand c;
  try {
    if (!j.is_object()) fail(ErrorKind::kInvalidConfig, "target command must be an object");
    const double x = j.at("x").get<double>();
    const double y = j.at("y").get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) fail(ErrorKind::kInvalidConfig, "target position is not finite");
    c.position = Point2(x, y);
    c.seq = j.at("seq").get<std::int64_t>();
    if (j.contains("t")) c.client_time_ms = j.at("t").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("bad target command: ") + e.what());
  }
  return c;
}

json ack_json(const TargetAck& ack) {
  json j{{"type", "ack"},
         {"accepted", ack.accepted},
         {"stale", ack.stale},
         {"clamped", ack.clamped},
         {"applied", json{{"x", ack.applied.x()}, {"y", ack.applied.y()}}},
         {"seq", ack.seq}};
  if (ack.stale) j["error"] = std::string(to_string(ErrorKind::kStaleSequence));
  return j;
}

std::vector<double> downsample_area(const std::vector<double>& src, int src_res, int dst_res) {
  if (src_res <= 0 || dst_res <= 0 || src.size() != static_cast<std::size_t>(src_res) * src_res) {
    fail(ErrorKind::kDimensionMismatch, "downsample_area: grid size mismatch");
  }
  if (dst_res >= src_res) return src;
  // Overlap of destination interval k with source interval s, in source units.
  const double scale = static_cast<double>(src_res) / dst_res;
  std::vector<std::vector<std::pair<int, double>>> weights(static_cast<std::size_t>(dst_res));
  for (int k = 0; k < dst_res; ++k) {
    const double lo = k * scale, hi = (k + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < src_res && s < hi; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (w > 0.0) weights[static_cast<std::size_t>(k)].emplace_back(s, w / scale);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(dst_res) * dst_res, 0.0);
  for (int ky = 0; ky < dst_res; ++ky) {
    for (int kx = 0; kx < dst_res; ++kx) {
      double acc = 0.0;
      for (const auto& [sy, wy] : weights[static_cast<std::size_t>(ky)]) {
        for (const auto& [sx, wx] : weights[static_cast<std::size_t>(kx)]) {
          acc += wy * wx * src[static_cast<std::size_t>(sy) * src_res + sx];
        }
      }
      out[static_cast<std::size_t>(ky) * dst_res + kx] = acc;
    }
  }
  return out;
}

json snapshot_json(const Simulation& sim, const std::string& session, std::int64_t seq, RunStatus status) {
  const ScenarioConfig& cfg = sim.config();
  const int n = sim.node_count();
  json j;
  j["type"] = "snapshot";
  j["session"] = session;
  j["seq"] = seq;
  j["status"] = std::string(to_string(status));
  j["t"] = sim.time();
  j["step"] = sim.step_index();
  j["domain"] = json::array({cfg.domain.x_lo, cfg.domain.x_hi, cfg.domain.y_lo, cfg.domain.y_hi});

  std::vector<ActivationMatrices> act;
  for (int c = 0; c < sim.channel_count(); ++c) act.push_back(sim.activation(c));
  const std::vector<Point2> pos = sim.positions();
  json agents = json::array();
  for (int i = 0; i < n; ++i) {
    bool active = false;
    for (const auto& a : act) active = active || a.is_active(i);
    agents.push_back(json{{"id", i}, {"x", pos[static_cast<std::size_t>(i)].x()},
                          {"y", pos[static_cast<std::size_t>(i)].y()}, {"active", active}});
  }
  j["agents"] = agents;

  if (sim.has_target()) {
    const TargetSample t = sim.target();
    json target{{"true", json{{"x", t.position.x()}, {"y", t.position.y()}, {"speed", num(t.speed)}}}};
    if (const auto est = sim.target_estimate()) {
      target["estimate"] = json{{"x", num(est->position.x())}, {"y", num(est->position.y())}, {"speed", num(est->speed)}};
    } else {
      target["estimate"] = nullptr;
    }
    j["target"] = target;
  } else {
    j["target"] = nullptr;
  }

  json channels = json::array();
  json bounds = json::array();
  for (int c = 0; c < sim.channel_count(); ++c) {
    const ChannelConfig& cc = cfg.channels[static_cast<std::size_t>(c)];
    const ChannelSample s = sim.sample_channel(c);
    json active = json::array();
    for (int i = 0; i < n; ++i) active.push_back(act[static_cast<std::size_t>(c)].is_active(i));
    channels.push_back(json{{"name", cc.name},
                            {"adaptive", cc.adaptive.has_value()},
                            {"epsilon", num(s.epsilon)},
                            {"consensus_error", num(s.consensus_error)},
                            {"x", stats(s.x)},
                            {"x_hat", stats(s.x_hat)},
                            {"delta_hat", stats(s.delta_hat)},
                            {"active", active}});
    if (cc.adaptive) {
      const AdaptiveBounds b = theorem2_bounds(*cc.adaptive, cc.network, sim.graph(), sim.uncertainty(c));
      const bool inside = s.lyapunov <= b.lyapunov_level;
      bounds.push_back(json{{"channel", cc.name},
                            {"e_x", bound_entry(s.e_x, b.e_x)},
                            {"e_z", bound_entry(s.e_z, b.e_z)},
                            {"delta_tilde", bound_entry(s.delta_tilde, b.delta_tilde)},
                            {"lyapunov", bound_entry(s.lyapunov, b.lyapunov_level)},
                            {"settled", inside}});
    }
  }
  j["channels"] = channels;
  j["bounds"] = bounds;

  json cells = json::array();
  json centroids = json::array();
  json density = nullptr;
  double h = kNaN, jc = kNaN;
  if (const FleetReport* rep = sim.coverage_report()) {
    for (const Polygon& poly : rep->partition.cells) {
      json pj = json::array();
      for (const Point2& v : poly) pj.push_back(point(v));
      cells.push_back(pj);
    }
    for (const Centroid& g : rep->centroids) centroids.push_back(point(g.position));
    h = rep->coverage_cost;
    jc = rep->centroid_cost;
  }
  if (const DensityField* phi = sim.density()) {
    const int res = phi->domain.grid_resolution;
    const int out = std::min(res, kSnapshotGridMax);
    const std::vector<double> values = downsample_area(phi->phi, res, out);
    density = json{{"rows", out},
                   {"cols", out},
                   {"max", values.empty() ? 0.0 : *std::max_element(values.begin(), values.end())},
                   {"values", values}};
  }
  j["voronoi"] = cells;
  j["centroids"] = centroids;
  j["density"] = density;
  j["H"] = num(h);
  j["J"] = num(jc);
  return j;
}

json heartbeat_json(const std::string& session, std::int64_t seq, RunStatus status, double t) {
  return json{{"type", "heartbeat"}, {"session", session}, {"seq", seq}, {"status", std::string(to_string(status))},
              {"t", t}};
}

std::vector<std::string> schema_paths(const json& j) {
  std::set<std::string> out;
  collect_paths(j, "", out);
  return {out.begin(), out.end()};
}

Session::Session(std::string id, ScenarioConfig cfg, ServiceOptions opts)
    : id_(std::move(id)),
      cfg_(std::move(cfg)),
      opts_(std::move(opts)),
      sim_(cfg_),
      commands_(opts_.command_capacity) {
  thread_ = std::thread([this] { loop(); });
}

Session::~Session() { stop(); }

RunStatus Session::status() const {
  std::lock_guard lock(state_mu_);
  return status_;
}

bool Session::active() const {
  const RunStatus s = status();
  return s == RunStatus::kIdle || s == RunStatus::kRunning || s == RunStatus::kPaused;
}

void Session::start() {
  {
    std::lock_guard lock(state_mu_);
    if (status_ != RunStatus::kIdle) fail(ErrorKind::kSessionNotRunning, "session " + id_ + " already started");
    status_ = RunStatus::kRunning;
  }
  state_cv_.notify_all();
}

void Session::pause() {
  {
    std::lock_guard lock(state_mu_);
    if (status_ != RunStatus::kRunning) fail(ErrorKind::kSessionNotRunning, "session " + id_ + " is not running");
    status_ = RunStatus::kPaused;
  }
  state_cv_.notify_all();
}

void Session::resume() {
  {
    std::lock_guard lock(state_mu_);
    if (status_ != RunStatus::kPaused) fail(ErrorKind::kSessionNotRunning, "session " + id_ + " is not paused");
    status_ = RunStatus::kRunning;
  }
  state_cv_.notify_all();
}

void Session::stop() {
  {
    std::lock_guard lock(state_mu_);
    if (quit_) return;
    quit_ = true;
    status_ = RunStatus::kStopped;
  }
  state_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  publish(heartbeat_json(id_, ++seq_, RunStatus::kStopped, sim_time()));
  export_logs();
  std::lock_guard lock(sub_mu_);
  for (auto& s : subscribers_) s->close();
}

TargetAck Session::ingest(const TargetCommand& cmd) {
  if (status() != RunStatus::kRunning) fail(ErrorKind::kSessionNotRunning, "session " + id_ + " is not running");
  std::lock_guard lock(ingest_mu_);
  TargetAck ack;
  if (cmd.seq <= accepted_seq_) {
    ack.stale = true;
    ack.seq = accepted_seq_;
    return ack;
  }
  ack.applied = cfg_.domain.clamp(cmd.position);
  ack.clamped = ack.applied != cmd.position;
  ack.accepted = true;
  ack.seq = accepted_seq_ = cmd.seq;
  commands_.push(TargetCommand{ack.applied, cmd.seq, cmd.client_time_ms});
  return ack;
}

std::shared_ptr<Session::Subscriber> Session::subscribe() {
  auto sub = std::make_shared<Subscriber>(opts_.subscriber_capacity);
  std::lock_guard lock(sub_mu_);
  if (quit_) sub->close();
  subscribers_.push_back(sub);
  return sub;
}

void Session::unsubscribe(const std::shared_ptr<Subscriber>& sub) {
  std::lock_guard lock(sub_mu_);
  subscribers_.erase(std::remove(subscribers_.begin(), subscribers_.end(), sub), subscribers_.end());
}

int Session::client_count() const {
  std::lock_guard lock(sub_mu_);
  return static_cast<int>(subscribers_.size());
}

long Session::dropped_messages() const {
  std::lock_guard lock(sub_mu_);
  long n = 0;
  for (const auto& s : subscribers_) n += s->dropped();
  return n;
}

json Session::summary() const {
  std::lock_guard lock(sim_mu_);
  json j = report_json(evaluate_run(sim_));
  j["session"] = id_;
  j["status"] = std::string(to_string(status()));
  j["commands"] = sim_.command_log().size();
  j["snapshot_seq"] = seq_.load();
  j["clients"] = client_count();
  j["mean_step_seconds"] = num(timed_steps_ ? step_seconds_ / static_cast<double>(timed_steps_) : kNaN);
  return j;
}

double Session::sim_time() const {
  std::lock_guard lock(sim_mu_);
  return sim_.time();
}

double Session::mean_step_seconds() const {
  std::lock_guard lock(sim_mu_);
  return timed_steps_ ? step_seconds_ / static_cast<double>(timed_steps_) : kNaN;
}

long Session::steps_run() const {
  std::lock_guard lock(sim_mu_);
  return timed_steps_;
}

void Session::publish(const json& msg) {
  const Message m = std::make_shared<const std::string>(msg.dump());
  std::lock_guard lock(sub_mu_);
  for (auto& s : subscribers_) s->push(m);
}

void Session::export_logs() {
  if (opts_.log_dir.empty()) return;
  std::lock_guard lock(sim_mu_);
  if (exported_) return;
  exported_ = true;
  try {
    const RunReport rep = evaluate_run(sim_);
    export_metrics(sim_, rep, (std::filesystem::path(opts_.log_dir) / id_).string());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "session %s: log export failed: %s\n", id_.c_str(), e.what());
  }
}

void Session::loop() {
  using clock = std::chrono::steady_clock;
  const auto snapshot_period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / std::max(opts_.snapshot_rate, 1e-3)));
  const auto heartbeat_period = std::chrono::seconds(1);
  const double ratio = opts_.realtime_ratio;
  const double dt = cfg_.dt;
  auto next_snapshot = clock::now();
  auto next_heartbeat = clock::now();
  bool anchored = false;
  clock::time_point wall_anchor;
  double sim_anchor = 0.0;

  for (;;) {
    RunStatus st;
    {
      std::lock_guard lock(state_mu_);
      if (quit_) return;
      st = status_;
    }
    auto now = clock::now();
    if (st != RunStatus::kRunning) {
      anchored = false;
      if (now >= next_heartbeat) {
        publish(heartbeat_json(id_, ++seq_, st, sim_time()));
        next_heartbeat = now + heartbeat_period;
      }
      std::unique_lock lock(state_mu_);
      state_cv_.wait_until(lock, next_heartbeat, [&] { return quit_ || status_ != st; });
      continue;
    }

    next_heartbeat = now;
    if (!anchored) {
      anchored = true;
      wall_anchor = now;
      sim_anchor = sim_time();
      next_snapshot = std::min(next_snapshot, now);
    }
    const auto batch_end = std::min(next_snapshot, now + std::chrono::milliseconds(5));
    bool done = false;
    std::string error;
    clock::time_point due = now;
    {
      std::lock_guard lock(sim_mu_);
      const auto next_due = [&] {
        const double lead = sim_.time() + dt - sim_anchor;
        return wall_anchor + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(lead / ratio));
      };
      for (const TargetCommand& c : commands_.drain()) sim_.command_target(c.position, c.seq);
      try {
        while (!sim_.finished()) {
          if (ratio > 0.0 && clock::now() < next_due()) break;
          const auto t0 = clock::now();
          sim_.step();
          const auto t1 = clock::now();
          step_seconds_ += std::chrono::duration<double>(t1 - t0).count();
          ++timed_steps_;
          if (t1 >= batch_end) break;
        }
      } catch (const Error& e) {
        error = e.what();
      }
      done = sim_.finished() || !error.empty();
      if (ratio > 0.0 && !done) due = next_due();
    }
    now = clock::now();
    if (now >= next_snapshot || done) {
      json snap;
      {
        std::lock_guard lock(sim_mu_);
        snap = snapshot_json(sim_, id_, ++seq_, done ? RunStatus::kFinished : RunStatus::kRunning);
      }
      if (!error.empty()) snap["error"] = error;
      publish(snap);
      next_snapshot += snapshot_period;
      if (next_snapshot < now) next_snapshot = now + snapshot_period;
    }
    if (done) {
      {
        std::lock_guard lock(state_mu_);
        if (status_ == RunStatus::kRunning) status_ = RunStatus::kFinished;
      }
      if (!error.empty()) std::fprintf(stderr, "session %s: %s\n", id_.c_str(), error.c_str());
      export_logs();
      continue;
    }
    const auto wake = std::min(next_snapshot, due);
    if (wake > clock::now()) {
      std::unique_lock lock(state_mu_);
      state_cv_.wait_until(lock, wake, [&] { return quit_ || status_ != RunStatus::kRunning; });
    }
  }
}

}  // namespace apnet
