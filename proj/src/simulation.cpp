#include "apnet/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apnet/diagnostics.hpp"
#include "apnet/errors.hpp"

namespace apnet {

namespace {

const ScenarioConfig& validated(const ScenarioConfig& cfg) {
  cfg.validate();
  return cfg;
}

double value_of(const ValueSpec& v, double t, const TargetSample& target) {
  switch (v.kind) {
    case ValueSpec::Kind::kConstant: return v.offset;
    case ValueSpec::Kind::kSinusoid: return v.offset + v.amplitude * std::sin(v.omega * t + v.phase);
    case ValueSpec::Kind::kTargetX: return target.position.x();
    case ValueSpec::Kind::kTargetY: return target.position.y();
    case ValueSpec::Kind::kTargetSpeed: return target.speed;
  }
  return 0.0;
}

}  // namespace

std::vector<double> Trace::times() const {
  std::vector<double> t;
  t.reserve(rows.size());
  for (const auto& r : rows) t.push_back(r.t);
  return t;
}

std::vector<double> Trace::series(int channel, double ChannelSample::*field) const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.channels.at(static_cast<std::size_t>(channel)).*field);
  return v;
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)), graph_(Graph::build(validated(cfg_).node_count, cfg_.edges)) {
  n_ = graph_.node_count();
  m_ = graph_.edge_count();
  bt_ = graph_.incidence().transpose();
  bt_lpinv_ = bt_ * graph_.laplacian_pinv();
  total_ = cfg_.step_count();

  Rng rng(cfg_.seed);
  const int block = 5 * n_ + 2 * m_;
  int offset = 0;
  std::vector<Eigen::VectorXd> x0;
  for (const auto& ch : cfg_.channels) {
    Channel c;
    c.cfg = &ch;
    x0.push_back(ch.initial.build(n_, rng));
    c.model = ch.uncertainty.build(n_, rng);
    if (ch.adaptive) c.bounds = ch.adaptive->bounds(n_);
    c.offset = offset;
    offset += block;
    channels_.push_back(std::move(c));
  }
  if (cfg_.coverage.enabled) {
    pos_offset_ = offset;
    offset += 2 * n_;
  }
  y_ = Eigen::VectorXd::Zero(offset);
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const Channel& c = channels_[k];
    const int o = c.offset;
    y_.segment(o, n_) = x0[k];
    const Eigen::VectorXd delta = c.model.values(0.0);
    if (c.cfg->adaptive) {
      Eigen::VectorXd dh = Eigen::VectorXd::Constant(n_, c.cfg->initial.delta_hat);
      if (!c.cfg->adaptive->constant_mode) dh = c.bounds.clamp(dh);
      y_.segment(o + 4 * n_, n_) = dh;
      y_.segment(o + 2 * n_, n_) = x0[k] + delta + Eigen::VectorXd::Constant(n_, c.cfg->initial.x_hat_offset);
    }
  }
  if (pos_offset_ >= 0) {
    for (int i = 0; i < n_; ++i) y_.segment(pos_offset_ + 2 * i, 2) = cfg_.agent_positions[i];
  }

  switch (cfg_.target.mode) {
    case TargetConfig::Mode::kScripted: scripted_.emplace(cfg_.target); break;
    case TargetConfig::Mode::kExternal:
    case TargetConfig::Mode::kReplay:
      external_.emplace(cfg_.target.start, cfg_.target.v_max, cfg_.target.speed_window, cfg_.domain);
      break;
    case TargetConfig::Mode::kNone: break;
  }
  if (cfg_.target.mode == TargetConfig::Mode::kReplay) {
    replay_ = read_command_log(cfg_.target.replay_log);
    std::stable_sort(replay_.begin(), replay_.end(),
                     [](const CommandRecord& a, const CommandRecord& b) { return a.step < b.step; });
  }
  if (external_) held_target_ = external_->sample(0.0);

  if (cfg_.coverage.enabled) {
    const auto& p = cfg_.coverage.params;
    phi_ = DensityField::uniform(cfg_.domain2d(), cfg_.coverage.initial_density);
    phi_.bump_radius = p.bump_radius;
    phi_.decay = p.decay;
    phi_.phi_max = p.phi_max;
    phi_prev_ = phi_;
    velocity_.assign(static_cast<std::size_t>(n_), Point2::Zero());
    coverage_every_ = std::max(1, static_cast<int>(std::lround(cfg_.coverage.update_interval / cfg_.dt)));
  }
  if (cfg_.output.frame_interval > 0.0 && cfg_.coverage.enabled) {
    frame_every_ = std::max(1, static_cast<int>(std::lround(cfg_.output.frame_interval / cfg_.dt)));
  }
  eps_hold_.assign(channels_.size(), kNaN);

  trace_.node_count = n_;
  trace_.coverage = cfg_.coverage.enabled;
  for (const auto& ch : cfg_.channels) trace_.channel_names.push_back(ch.name);
  record();
}

TargetSample Simulation::target_at(double t) const {
  if (scripted_) return scripted_->sample(t);
  if (external_) return held_target_;
  return TargetSample{};
}

std::vector<Point2> Simulation::input_positions(const TargetSample& target) const {
  std::vector<Point2> out;
  for (const auto& in : cfg_.inputs) out.push_back(in.follows_target ? target.position : in.position);
  return out;
}

std::vector<Point2> Simulation::positions_from(const Eigen::VectorXd& y) const {
  if (pos_offset_ < 0) return cfg_.agent_positions;
  std::vector<Point2> out(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) out[i] = y.segment<2>(pos_offset_ + 2 * i);
  return out;
}

std::vector<Point2> Simulation::positions() const { return positions_from(y_); }

ActivationMatrices Simulation::activation(int channel) const {
  const auto inputs = input_positions(target());
  const auto agents = positions();
  return activation_matrices(agents, inputs, channels_.at(channel).cfg->network.sensing_radius);
}

Eigen::VectorXd Simulation::derivative(double t, const Eigen::VectorXd& y, const TargetSample& target) const {
  Eigen::VectorXd dy = Eigen::VectorXd::Zero(y.size());
  const auto agents = positions_from(y);
  const auto inputs = input_positions(target);
  std::vector<double> cv(cfg_.inputs.size());

  for (const Channel& ch : channels_) {
    const ChannelConfig& cc = *ch.cfg;
    const NetworkParams& np = cc.network;
    const int o = ch.offset;
    for (std::size_t h = 0; h < cfg_.inputs.size(); ++h) cv[h] = value_of(cfg_.inputs[h].values.at(cc.name), t, target);
    const ActivationMatrices act = activation_matrices(agents, inputs, np.sensing_radius);
    const Eigen::VectorXd c = pad_inputs(cv, n_);
    const Eigen::VectorXd x = y.segment(o, n_);
    const Eigen::VectorXd p = y.segment(o + n_, n_);
    const Eigen::VectorXd xt = x + ch.model.values(t);
    const Eigen::VectorXd z = y.segment(o + 5 * n_, m_);

    if (!cc.adaptive) {
      for (int i = 0; i < n_; ++i) {
        dy(o + i) = np.a * x(i) + nominal_control(i, xt, p, graph_, act, c, np);
        dy(o + n_ + i) = integral_rate(i, xt, p, graph_, np);
      }
      dy.segment(o + 5 * n_, m_) = -np.gamma * (bt_ * xt) - np.gamma * np.sigma * z;
      if (cross_check_) {
        const Eigen::VectorXd ux = compact_state_rate(xt, p, graph_, act, c, np) - np.a * xt;
        const Eigen::VectorXd pd = compact_integral_rate(xt, p, graph_, np);
        for (int i = 0; i < n_; ++i) {
          const double u = dy(o + i) - np.a * x(i);
          if (std::abs(u - ux(i)) > 1e-12 * (1.0 + std::abs(ux(i))) ||
              std::abs(dy(o + n_ + i) - pd(i)) > 1e-12 * (1.0 + std::abs(pd(i)))) {
            throw std::logic_error("per-agent and vectorized nominal rates disagree");
          }
        }
        ++cross_checks_;
      }
      continue;
    }

    const AdaptiveParams& ap = *cc.adaptive;
    AdaptiveState est{y.segment(o + 4 * n_, n_), y.segment(o + 2 * n_, n_), y.segment(o + 3 * n_, n_)};
    const Eigen::VectorXd ex = est.e_x(xt);
    Eigen::VectorXd w(n_);
    for (int i = 0; i < n_; ++i) {
      dy(o + i) = np.a * x(i) + adaptive_control(i, xt, est.delta_hat, p, graph_, act, c, np, ap.law);
      dy(o + n_ + i) = adaptive_integral_rate(i, xt, est.delta_hat, p, graph_, np);
      dy(o + 2 * n_ + i) = state_estimate_rate(i, xt, est, graph_, act, c, np, ap);
      dy(o + 3 * n_ + i) = integral_estimate_rate(i, est.x_hat, est.p_hat, est.delta_hat, graph_, np, ap.law);
      dy(o + 4 * n_ + i) = uncertainty_update_rate(ex(i), est.delta_hat(i), ap, np.a, ch.bounds.theta_min(i),
                                                   ch.bounds.theta_max(i), ch.bounds.nu(i));
      w(i) = corrective_w(i, est.delta_hat, graph_, np.gamma);
    }
    const Eigen::VectorXd zh = y.segment(o + 5 * n_ + m_, m_);
    dy.segment(o + 5 * n_, m_) = -np.gamma * (bt_ * xt) - np.gamma * np.sigma * z + bt_lpinv_ * w;
    dy.segment(o + 5 * n_ + m_, m_) = -np.gamma * (bt_ * est.x_hat) - np.gamma * np.sigma * zh;
  }

  if (pos_offset_ >= 0) {
    for (int i = 0; i < n_; ++i) dy.segment<2>(pos_offset_ + 2 * i) = velocity_[i];
  }
  return dy;
}

std::optional<TargetEstimate> Simulation::target_estimate() const {
  if (!cfg_.coverage.enabled) return std::nullopt;
  const auto mean_of = [&](const std::string& name) {
    const Channel& ch = channels_.at(static_cast<std::size_t>(cfg_.channel_index(name)));
    const int block = ch.cfg->adaptive ? 2 : 0;
    return y_.segment(ch.offset + block * n_, n_).mean();
  };
  TargetEstimate e;
  e.position = Point2(mean_of(cfg_.coverage.estimate_x), mean_of(cfg_.coverage.estimate_y));
  e.speed = std::abs(mean_of(cfg_.coverage.estimate_speed));
  return e;
}

void Simulation::update_coverage() {
  const double dt = cfg_.coverage.update_interval;
  const TargetEstimate est = *target_estimate();
  phi_prev_ = phi_;
  phi_ = density_step(phi_, est, dt);
  const auto agents = positions();
  report_ = coverage_commands(agents, phi_, &phi_prev_, cfg_.coverage.params, dt);
  have_report_ = true;
  for (int i = 0; i < n_; ++i) velocity_[i] = report_.commands[i].velocity;
}

ExternalTarget::Ack Simulation::command_target(Point2 q, std::int64_t seq) {
  if (!external_) fail(ErrorKind::kInvalidConfig, "scenario target is not externally commanded");
  const ExternalTarget::Ack ack = external_->command(time(), q, seq);
  if (!ack.stale) command_log_.push_back(CommandRecord{step_, ack.applied.x(), ack.applied.y(), seq});
  return ack;
}

void Simulation::step() {
  if (finished()) return;
  const double dt = cfg_.dt;
  const double t = time();
  if (cfg_.target.mode == TargetConfig::Mode::kReplay) {
    while (replay_cursor_ < replay_.size() && replay_[replay_cursor_].step <= step_) {
      const CommandRecord& r = replay_[replay_cursor_++];
      command_target(Point2(r.x, r.y), r.seq);
    }
  }
  if (external_) {
    external_->advance(dt);
    held_target_ = external_->sample(t);
  }
  if (cfg_.coverage.enabled && step_ % coverage_every_ == 0) update_coverage();
  if (frame_every_ > 0 && step_ % frame_every_ == 0) frames_.push_back(DensityFrame{t, phi_.phi});

  const Eigen::VectorXd k1 = derivative(t, y_, target_at(t));
  const Eigen::VectorXd k2 = derivative(t + 0.5 * dt, y_ + 0.5 * dt * k1, target_at(t + 0.5 * dt));
  const Eigen::VectorXd k3 = derivative(t + 0.5 * dt, y_ + 0.5 * dt * k2, target_at(t + 0.5 * dt));
  const Eigen::VectorXd k4 = derivative(t + dt, y_ + dt * k3, target_at(t + dt));
  y_ += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  for (const Channel& ch : channels_) {
    if (!ch.cfg->adaptive || ch.cfg->adaptive->constant_mode) continue;
    auto dh = y_.segment(ch.offset + 4 * n_, n_);
    for (int i = 0; i < n_; ++i) {
      const double c = std::clamp(dh(i), ch.bounds.theta_min(i), ch.bounds.theta_max(i));
      if (c != dh(i)) {
        dh(i) = c;
        ++projection_clamps_;
      }
    }
  }
  if (pos_offset_ >= 0) {
    for (int i = 0; i < n_; ++i) {
      const Point2 q = y_.segment<2>(pos_offset_ + 2 * i);
      y_.segment<2>(pos_offset_ + 2 * i) = cfg_.domain.clamp(q);
    }
  }
  check_finite();
  ++step_;
  if (step_ % cfg_.record_stride == 0 || finished()) record();
}

void Simulation::run() {
  while (!finished()) step();
}

std::string Simulation::component_name(Eigen::Index k) const {
  static const char* names[] = {"x", "p", "x_hat", "p_hat", "delta_hat"};
  std::ostringstream out;
  if (pos_offset_ >= 0 && k >= pos_offset_) {
    const Eigen::Index r = k - pos_offset_;
    out << "sensor position O[" << r / 2 << "]." << (r % 2 == 0 ? "x" : "y");
    return out.str();
  }
  for (const Channel& ch : channels_) {
    const Eigen::Index r = k - ch.offset;
    if (r < 0 || r >= 5 * n_ + 2 * m_) continue;
    out << "channel '" << ch.cfg->name << "' ";
    if (r < 5 * n_) out << names[r / n_] << "[" << r % n_ << "]";
    else if (r < 5 * n_ + m_) out << "z[" << r - 5 * n_ << "]";
    else out << "z_hat[" << r - 5 * n_ - m_ << "]";
    return out.str();
  }
  return "state[" + std::to_string(k) + "]";
}

void Simulation::check_finite() const {
  for (Eigen::Index k = 0; k < y_.size(); ++k) {
    if (!std::isfinite(y_(k))) {
      std::ostringstream msg;
      msg << "non-finite " << component_name(k) << " at t = " << time() + cfg_.dt;
      fail(ErrorKind::kNonFiniteState, msg.str());
    }
  }
}

ChannelSample Simulation::sample_channel(int channel, double t, const Eigen::VectorXd& y,
                                         const TargetSample& target) const {
  const Channel& ch = channels_.at(static_cast<std::size_t>(channel));
  const ChannelConfig& cc = *ch.cfg;
  const int o = ch.offset;
  ChannelSample s;
  s.x = y.segment(o, n_);
  s.p = y.segment(o + n_, n_);
  s.delta = ch.model.values(t);

  const auto inputs = input_positions(target);
  std::vector<double> cv(cfg_.inputs.size());
  for (std::size_t h = 0; h < cfg_.inputs.size(); ++h) cv[h] = value_of(cfg_.inputs[h].values.at(cc.name), t, target);
  const auto act = activation_matrices(positions_from(y), inputs, cc.network.sensing_radius);
  const Eigen::VectorXd c = pad_inputs(cv, n_);
  s.active_count = act.active_count();
  const auto eps = input_average(act.k2, c);
  s.epsilon_defined = eps.has_value();
  s.epsilon = eps ? *eps : eps_hold_[static_cast<std::size_t>(channel)];
  s.kc_c = Eigen::VectorXd::Zero(m_);
  if (eps) s.kc_c = bt_lpinv_ * (*eps * act.k1 - act.k2 * c);
  if (std::isfinite(s.epsilon)) s.consensus_error = (s.x.array() - s.epsilon).matrix().norm();

  if (cc.adaptive) {
    s.x_hat = y.segment(o + 2 * n_, n_);
    s.delta_hat = y.segment(o + 4 * n_, n_);
    const Eigen::VectorXd xt = s.x + s.delta;
    const Eigen::VectorXd ex = xt - s.x_hat - s.delta_hat;
    const Eigen::VectorXd ez = y.segment(o + 5 * n_, m_) - y.segment(o + 5 * n_ + m_, m_);
    const Eigen::VectorXd dt = s.delta - s.delta_hat;
    s.e_x = ex.norm();
    s.e_z = ez.norm();
    s.delta_tilde = dt.norm();
    s.lyapunov = lyapunov_value(ex, ez, dt, cc.network.gamma, cc.adaptive->gamma_rate);
  }
  return s;
}

ChannelSample Simulation::sample_channel(int channel) const {
  return sample_channel(channel, time(), y_, target());
}

void Simulation::record() {
  TraceRow row;
  row.step = step_;
  row.t = time();
  const TargetSample tg = target();
  for (int c = 0; c < channel_count(); ++c) {
    row.channels.push_back(sample_channel(c, row.t, y_, tg));
    if (row.channels.back().epsilon_defined) eps_hold_[static_cast<std::size_t>(c)] = row.channels.back().epsilon;
  }
  row.has_target = has_target();
  row.target = tg;
  if (const auto e = target_estimate()) {
    row.estimate = e->position;
    row.estimate_speed = e->speed;
  }
  row.positions = positions();
  if (have_report_) {
    for (const auto& c : report_.centroids) row.centroids.push_back(c.position);
    row.coverage_cost = report_.coverage_cost;
    const double mass = phi_.total_mass();
    row.normalized_cost = mass > 0.0 ? report_.coverage_cost / mass : kNaN;
    row.centroid_cost = report_.centroid_cost;
    row.qp_min_residual = report_.min_residual;
    row.qp_clamps = report_.clamp_events;
  }
  row.projection_clamps = projection_clamps_;
  trace_.rows.push_back(std::move(row));
}

}  // namespace apnet
