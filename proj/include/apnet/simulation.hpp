#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "apnet/adaptive.hpp"
#include "apnet/coverage.hpp"
#include "apnet/graph.hpp"
#include "apnet/network.hpp"
#include "apnet/scenario.hpp"
#include "apnet/target.hpp"

namespace apnet {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Recorded values of one channel at one instant. Estimator fields are NaN
/// (or empty) for nominal channels.
struct ChannelSample {
  Eigen::VectorXd x, p, x_hat, delta_hat, delta;
  Eigen::VectorXd kc_c;  // B^T L^+ (eps k1 - K2 c), zero while nothing is sensed
  double epsilon = kNaN; // held at its last defined value
  bool epsilon_defined = false;
  double consensus_error = kNaN;  // ||x - eps 1||
  double e_x = kNaN, e_z = kNaN, delta_tilde = kNaN, lyapunov = kNaN;
  int active_count = 0;
};

struct TraceRow {
  long step = 0;
  double t = 0.0;
  std::vector<ChannelSample> channels;
  bool has_target = false;
  TargetSample target;
  Point2 estimate = Point2::Constant(kNaN);
  double estimate_speed = kNaN;
  std::vector<Point2> positions;
  std::vector<Point2> centroids;
  double coverage_cost = kNaN;
  double normalized_cost = kNaN;  // H / total density mass
  double centroid_cost = kNaN;
  double qp_min_residual = kNaN;
  int qp_clamps = 0;
  long projection_clamps = 0;  // cumulative
};

struct Trace {
  std::vector<std::string> channel_names;
  int node_count = 0;
  bool coverage = false;
  std::vector<TraceRow> rows;

  std::vector<double> times() const;
  /// One scalar field of one channel across all rows.
  std::vector<double> series(int channel, double ChannelSample::*field) const;
};

struct DensityFrame {
  double t = 0.0;
  std::vector<double> phi;
};

/// Fixed-step RK4 integrator of the coupled consensus, estimator and
/// coverage system. Coverage (density, tessellation, QP) runs at the start
/// of every update interval and its velocities are held in between.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  const ScenarioConfig& config() const noexcept { return cfg_; }
  const Graph& graph() const noexcept { return graph_; }
  int node_count() const noexcept { return n_; }
  int channel_count() const noexcept { return static_cast<int>(channels_.size()); }
  long step_index() const noexcept { return step_; }
  long total_steps() const noexcept { return total_; }
  double time() const noexcept { return static_cast<double>(step_) * cfg_.dt; }
  bool finished() const noexcept { return step_ >= total_; }

  void step();
  void run();

  /// External and replay targets only. Applied at the current step index.
  ExternalTarget::Ack command_target(Point2 q, std::int64_t seq);
  const std::vector<CommandRecord>& command_log() const noexcept { return command_log_; }

  const Trace& trace() const noexcept { return trace_; }
  const std::vector<DensityFrame>& frames() const noexcept { return frames_; }

  ChannelSample sample_channel(int channel) const;
  const UncertaintyModel& uncertainty(int channel) const { return channels_.at(channel).model; }
  ActivationMatrices activation(int channel) const;
  std::vector<Point2> positions() const;
  TargetSample target() const { return target_at(time()); }
  bool has_target() const noexcept { return cfg_.target.mode != TargetConfig::Mode::kNone; }
  std::optional<TargetEstimate> target_estimate() const;
  const DensityField* density() const { return cfg_.coverage.enabled ? &phi_ : nullptr; }
  const FleetReport* coverage_report() const { return have_report_ ? &report_ : nullptr; }
  const ScriptedTrajectory* scripted() const { return scripted_ ? &*scripted_ : nullptr; }
  long projection_clamps() const noexcept { return projection_clamps_; }

  const Eigen::VectorXd& state() const noexcept { return y_; }
  /// Right-hand side at (t, y) with the target held at `target`.
  Eigen::VectorXd derivative(double t, const Eigen::VectorXd& y, const TargetSample& target) const;
  /// Compares per-agent and vectorized nominal rates at every stage.
  void set_cross_check(bool on) noexcept { cross_check_ = on; }
  long cross_checks() const noexcept { return cross_checks_; }

 private:
  struct Channel {
    const ChannelConfig* cfg = nullptr;
    UncertaintyModel model;
    ProjectionBounds bounds;
    int offset = 0;  // x, p, x_hat, p_hat, delta_hat (N each), z, z_hat (M each)
  };

  TargetSample target_at(double t) const;
  std::vector<Point2> input_positions(const TargetSample& target) const;
  std::vector<Point2> positions_from(const Eigen::VectorXd& y) const;
  ChannelSample sample_channel(int channel, double t, const Eigen::VectorXd& y, const TargetSample& target) const;
  void update_coverage();
  void record();
  void check_finite() const;
  std::string component_name(Eigen::Index k) const;

  ScenarioConfig cfg_;
  Graph graph_;
  int n_ = 0;
  int m_ = 0;
  std::vector<Channel> channels_;
  Eigen::MatrixXd bt_;        // B^T
  Eigen::MatrixXd bt_lpinv_;  // B^T L^+
  Eigen::VectorXd y_;
  int pos_offset_ = -1;
  long step_ = 0;
  long total_ = 0;
  int coverage_every_ = 1;
  int frame_every_ = 0;

  std::optional<ScriptedTrajectory> scripted_;
  std::optional<ExternalTarget> external_;
  TargetSample held_target_;
  std::vector<CommandRecord> replay_;
  std::size_t replay_cursor_ = 0;
  std::vector<CommandRecord> command_log_;

  DensityField phi_;
  DensityField phi_prev_;
  std::vector<Point2> velocity_;
  FleetReport report_;
  bool have_report_ = false;

  std::vector<double> eps_hold_;
  long projection_clamps_ = 0;
  bool cross_check_ = false;
  mutable long cross_checks_ = 0;
  Trace trace_;
  std::vector<DensityFrame> frames_;
};

}  // namespace apnet
