#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "apnet/scenario.hpp"
#include "apnet/simulation.hpp"

namespace apnet {

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8080;
  double snapshot_rate = 30.0;   // snapshots per wall second while running
  double realtime_ratio = 1.0;   // simulated seconds per wall second, 0 = unthrottled
  double v_max = 0.0;            // target speed clamp, 0 keeps the scenario value
  int max_sessions = 1;
  std::size_t subscriber_capacity = 8;
  std::size_t command_capacity = 1024;
  std::string log_dir;           // command logs and traces, empty disables
};

enum class RunStatus { kIdle, kRunning, kPaused, kFinished, kStopped };

std::string_view to_string(RunStatus s);

/// Bounded FIFO that discards its oldest entry when full, so producers never
/// block on slow consumers.
template <class T>
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity < 1 ? 1 : capacity) {}

  void push(T value) {
    {
      std::lock_guard lock(mu_);
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; })) return std::nullopt;
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  std::vector<T> drain() {
    std::lock_guard lock(mu_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  long dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
  long dropped_ = 0;
  bool closed_ = false;
};

struct TargetCommand {
  Point2 position = Point2::Zero();
  std::int64_t seq = 0;
  double client_time_ms = 0.0;
};

/// {"x": f, "y": f, "seq": n, "t": ms}. Throws InvalidConfig.
TargetCommand parse_target_command(const nlohmann::json& j);

struct TargetAck {
  bool accepted = false;
  bool stale = false;
  bool clamped = false;
  Point2 applied = Point2::Zero();
  std::int64_t seq = -1;  // latest accepted sequence number
};

nlohmann::json ack_json(const TargetAck& ack);

/// Area-weighted average of a row-major src_res x src_res grid onto a
/// dst_res x dst_res grid covering the same square.
std::vector<double> downsample_area(const std::vector<double>& src, int src_res, int dst_res);

constexpr int kSnapshotGridMax = 64;

nlohmann::json snapshot_json(const Simulation& sim, const std::string& session, std::int64_t seq,
                             RunStatus status);
nlohmann::json heartbeat_json(const std::string& session, std::int64_t seq, RunStatus status, double t);

/// Sorted key paths of a JSON document, arrays collapsed to "[]".
std::vector<std::string> schema_paths(const nlohmann::json& j);

using Message = std::shared_ptr<const std::string>;

/// One live simulation. The loop thread is the only writer of the
/// simulation; handlers talk to it through the command queue, the status
/// flags and per-subscriber snapshot queues.
class Session {
 public:
  using Subscriber = DropOldestQueue<Message>;

  Session(std::string id, ScenarioConfig cfg, ServiceOptions opts);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }
  const ScenarioConfig& config() const noexcept { return cfg_; }
  RunStatus status() const;
  bool active() const;  // idle, running or paused

  void start();
  void pause();   // SessionNotRunning unless running
  void resume();  // SessionNotRunning unless paused
  void stop();

  /// Throws SessionNotRunning. Stale sequence numbers are acked, not thrown.
  TargetAck ingest(const TargetCommand& cmd);

  std::shared_ptr<Subscriber> subscribe();
  void unsubscribe(const std::shared_ptr<Subscriber>& sub);
  int client_count() const;
  /// Messages discarded so far across the current subscribers.
  long dropped_messages() const;

  nlohmann::json summary() const;
  std::int64_t last_seq() const noexcept { return seq_.load(); }
  double sim_time() const;
  /// Mean wall seconds per integration step, excluding publishing.
  double mean_step_seconds() const;
  long steps_run() const;

 private:
  void loop();
  void publish(const nlohmann::json& msg);
  void export_logs();

  std::string id_;
  ScenarioConfig cfg_;
  ServiceOptions opts_;
  Simulation sim_;
  mutable std::mutex sim_mu_;

  mutable std::mutex state_mu_;
  std::condition_variable state_cv_;
  RunStatus status_ = RunStatus::kIdle;
  bool quit_ = false;
  bool exported_ = false;

  std::mutex ingest_mu_;
  std::int64_t accepted_seq_ = -1;
  DropOldestQueue<TargetCommand> commands_;

  mutable std::mutex sub_mu_;
  std::vector<std::shared_ptr<Subscriber>> subscribers_;

  std::atomic<std::int64_t> seq_{0};
  double step_seconds_ = 0.0;
  long timed_steps_ = 0;
  std::thread thread_;
};

}  // namespace apnet
