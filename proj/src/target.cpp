#include "apnet/target.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "apnet/errors.hpp"

namespace apnet {

ScriptedTrajectory::ScriptedTrajectory(const TargetConfig& cfg) : end_(cfg.start) {
  double t = 0.0;
  Point2 at = cfg.start;
  if (cfg.initial_dwell > 0.0) {
    segments_.push_back(Segment{t, t + cfg.initial_dwell, at, at, false});
    t += cfg.initial_dwell;
  }
  for (const auto& w : cfg.waypoints) {
    const double d = (w.position - at).norm();
    if (d > 0.0) {
      const double travel = 1.5 * d / cfg.v_max;
      segments_.push_back(Segment{t, t + travel, at, w.position, true});
      t += travel;
    }
    dwells_.push_back(Dwell{w.position, t, t + w.dwell});
    if (w.dwell > 0.0) {
      segments_.push_back(Segment{t, t + w.dwell, w.position, w.position, false});
      t += w.dwell;
    }
    at = w.position;
  }
  end_ = at;
  total_ = t;
}

TargetSample ScriptedTrajectory::sample(double t) const {
  TargetSample s;
  s.position = end_;
  for (const auto& seg : segments_) {
    if (t < seg.t0) break;
    if (t >= seg.t1) continue;
    if (!seg.moving) {
      s.position = seg.p0;
      return s;
    }
    const double dur = seg.t1 - seg.t0;
    const double u = (t - seg.t0) / dur;
    const Point2 d = seg.p1 - seg.p0;
    s.position = seg.p0 + d * (u * u * (3.0 - 2.0 * u));
    s.velocity = d * (6.0 * u * (1.0 - u) / dur);
    s.speed = s.velocity.norm();
    return s;
  }
  if (!segments_.empty() && t < segments_.front().t0) s.position = segments_.front().p0;
  return s;
}

ExternalTarget::ExternalTarget(Point2 start, double v_max, double window, Rect domain)
    : position_(domain.clamp(start)), commanded_(position_), v_max_(v_max), window_(window), domain_(domain) {}

ExternalTarget::Ack ExternalTarget::command(double t, Point2 q, std::int64_t seq) {
  Ack ack;
  if (seq <= last_seq_) {
    ack.stale = true;
    ack.seq = last_seq_;
    ack.applied = commanded_;
    return ack;
  }
  last_seq_ = seq;
  const Point2 c = domain_.clamp(q);
  ack.clamped = c != q;
  ack.applied = c;
  ack.seq = seq;
  commanded_ = c;
  recent_.push_back(Stamp{t, c});
  while (recent_.size() > 2 && t - recent_.front().t > window_ + 1e-12) recent_.pop_front();
  return ack;
}

void ExternalTarget::advance(double dt) {
  const Point2 d = commanded_ - position_;
  const double dist = d.norm();
  const double reach = v_max_ * dt;
  if (dist <= reach) {
    velocity_ = dt > 0.0 ? Point2(d / dt) : Point2::Zero();
    position_ = commanded_;
  } else {
    velocity_ = d * (v_max_ / dist);
    position_ += d * (reach / dist);
  }
}

double ExternalTarget::raw_speed() const {
  if (recent_.size() < 2) return 0.0;
  const Stamp& a = recent_.front();
  const Stamp& b = recent_.back();
  const double span = b.t - a.t;
  if (span <= 0.0) return 0.0;
  return (b.q - a.q).norm() / span;
}

TargetSample ExternalTarget::sample(double t) const {
  TargetSample s;
  s.position = position_;
  s.velocity = velocity_;
  if (recent_.empty()) return s;
  const double since = t - recent_.back().t;
  const double fade = std::clamp(1.0 - since / window_, 0.0, 1.0);
  s.speed = std::min(raw_speed(), v_max_) * fade;
  return s;
}

void write_command_log(const std::string& path, const std::vector<CommandRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIoError, "cannot write command log " + path);
  for (const auto& r : records) {
    out << nlohmann::json{{"step", r.step}, {"x", r.x}, {"y", r.y}, {"seq", r.seq}}.dump() << '\n';
  }
  if (!out) fail(ErrorKind::kIoError, "failed writing command log " + path);
}

std::vector<CommandRecord> read_command_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open command log " + path);
  std::vector<CommandRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back(CommandRecord{j.at("step").get<long>(), j.at("x").get<double>(), j.at("y").get<double>(),
                                  j.at("seq").get<std::int64_t>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kInvalidConfig, "malformed command log line: " + line);
    }
  }
  return out;
}

}  // namespace apnet
