#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "apnet/geometry.hpp"
#include "apnet/scenario.hpp"

namespace apnet {

struct TargetSample {
  Point2 position = Point2::Zero();
  Point2 velocity = Point2::Zero();
  double speed = 0.0;
};

/// Waypoint path: dwell, then cubic Hermite moves with zero end velocities
/// and peak speed v_max, then dwell. Holds the last point afterwards.
class ScriptedTrajectory {
 public:
  struct Dwell {
    Point2 position;
    double start = 0.0;
    double end = 0.0;
  };

  explicit ScriptedTrajectory(const TargetConfig& cfg);

  TargetSample sample(double t) const;
  double total_time() const noexcept { return total_; }
  /// Dwells at the listed waypoints (the initial dwell is not included).
  const std::vector<Dwell>& dwells() const noexcept { return dwells_; }

 private:
  struct Segment {
    double t0, t1;
    Point2 p0, p1;
    bool moving;
  };
  std::vector<Segment> segments_;
  std::vector<Dwell> dwells_;
  Point2 end_;
  double total_ = 0.0;
};

/// Externally commanded target. Commands are clamped to the domain; the
/// position follows the latest command at no more than v_max; the speed
/// reading is the finite difference over the commands in the last window,
/// clamped to v_max, fading linearly to zero over one window after the last
/// command.
class ExternalTarget {
 public:
  struct Ack {
    Point2 applied = Point2::Zero();
    bool clamped = false;
    bool stale = false;
    std::int64_t seq = -1;  // latest accepted sequence number
  };

  ExternalTarget(Point2 start, double v_max, double window, Rect domain);

  Ack command(double t, Point2 q, std::int64_t seq);
  /// Moves the position toward the commanded point over one step.
  void advance(double dt);
  TargetSample sample(double t) const;
  double raw_speed() const;
  std::int64_t last_seq() const noexcept { return last_seq_; }
  Point2 commanded() const noexcept { return commanded_; }

 private:
  struct Stamp {
    double t;
    Point2 q;
  };
  Point2 position_;
  Point2 commanded_;
  Point2 velocity_ = Point2::Zero();
  double v_max_;
  double window_;
  Rect domain_;
  std::deque<Stamp> recent_;
  std::int64_t last_seq_ = -1;
};

/// One ingested command, quantized to the step at which it was applied.
struct CommandRecord {
  long step = 0;
  double x = 0.0;
  double y = 0.0;
  std::int64_t seq = 0;
};

void write_command_log(const std::string& path, const std::vector<CommandRecord>& records);
std::vector<CommandRecord> read_command_log(const std::string& path);

}  // namespace apnet
