#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "apnet/adaptive.hpp"
#include "apnet/coverage.hpp"
#include "apnet/network.hpp"
#include "apnet/rng.hpp"

namespace apnet {

/// Exogenous input value c_h(t) for one channel.
struct ValueSpec {
  enum class Kind { kConstant, kSinusoid, kTargetX, kTargetY, kTargetSpeed };
  Kind kind = Kind::kConstant;
  double offset = 0.0;  // constant value, or sinusoid mean
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;

  /// Declared |c| and |c'| bounds for analytic kinds; target kinds report
  /// nothing and are bounded by the domain and target speed limit.
  double bound() const;
  double rate_bound() const;
};

struct InputSpec {
  bool follows_target = false;
  Point2 position = Point2::Zero();
  std::map<std::string, ValueSpec> values;  // keyed by channel name
};

struct UncertaintySpec {
  enum class Kind { kNone, kConstant, kUniformConstant, kSinusoidal, kSmoothedSteps };
  Kind kind = Kind::kNone;
  std::vector<double> values;                // constant
  double low = 0.0, high = 0.0;              // uniform draws (constant, step levels)
  std::pair<double, double> amplitude{0.0, 0.0};  // sinusoid draws
  std::pair<double, double> omega{0.0, 0.0};
  std::pair<double, double> phase{0.0, 0.0};
  double period = 10.0, ramp = 2.0;          // smoothed steps
  int levels = 4;

  UncertaintyModel build(int node_count, Rng& rng) const;
};

struct InitialSpec {
  enum class Kind { kZero, kValues, kUniform };
  Kind kind = Kind::kZero;
  std::vector<double> values;
  double low = 0.0, high = 0.0;
  double x_hat_offset = 0.0;  // added to the measurement-based x_hat(0)
  double delta_hat = 0.0;     // delta_hat(0), clamped into the projection box

  Eigen::VectorXd build(int node_count, Rng& rng) const;
};

struct ChannelConfig {
  std::string name;
  NetworkParams network;
  std::optional<AdaptiveParams> adaptive;  // empty: nominal loop on measurements
  UncertaintySpec uncertainty;
  InitialSpec initial;
};

struct Waypoint {
  Point2 position = Point2::Zero();
  double dwell = 0.0;
};

struct TargetConfig {
  enum class Mode { kNone, kScripted, kExternal, kReplay };
  Mode mode = Mode::kNone;
  Point2 start = Point2::Zero();
  double initial_dwell = 0.0;
  std::vector<Waypoint> waypoints;
  double v_max = 1.0;          // scripted cruise speed bound, external speed clamp
  double speed_window = 0.2;   // external speed estimate window and decay time
  std::string replay_log;      // JSONL command log for kReplay
};

struct CoverageConfig {
  bool enabled = false;
  CoverageParams params;
  double update_interval = 0.05;
  double initial_density = 0.0;
  std::string estimate_x = "x";
  std::string estimate_y = "y";
  std::string estimate_speed = "v";
};

struct OutputConfig {
  std::string dir = "out";
  double frame_interval = 0.0;  // seconds between density frames, 0 disables
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double duration = 1.0;
  int record_stride = 10;
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // 0-indexed
  std::vector<Point2> agent_positions;
  Rect domain{0.0, 20.0, 0.0, 20.0};
  std::vector<ChannelConfig> channels;
  std::vector<InputSpec> inputs;
  TargetConfig target;
  CoverageConfig coverage;
  OutputConfig output;

  /// Throws InvalidConfig (or DimensionMismatch / graph errors).
  void validate() const;
  long step_count() const;
  int channel_index(const std::string& name) const;  // -1 when absent
  Domain2D domain2d() const { return Domain2D{domain, coverage.params.grid_resolution}; }
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

/// Six agents on a hexagon ring with one chord (ring 1-...-6-1 plus 2-5).
std::vector<std::pair<int, int>> figure1_edges();
std::vector<Point2> figure1_positions();

/// The 25-agent field experiment with the published gains.
ScenarioConfig sec5_default_scenario();

}  // namespace apnet
