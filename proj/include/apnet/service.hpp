#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "apnet/errors.hpp"
#include "apnet/session.hpp"

namespace apnet {

/// HTTP status for an error kind.
int http_status(ErrorKind kind);

/// Session registry behind the HTTP routes. Usable without sockets.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions opts) : opts_(std::move(opts)) {}
  ~SessionManager();

  /// Empty body uses the field-experiment default. The target is always
  /// externally commanded. Throws InvalidConfig, SessionLimitReached.
  std::shared_ptr<Session> create(const std::string& body, bool autostart = true);
  /// Throws SessionNotFound.
  std::shared_ptr<Session> get(const std::string& id) const;
  std::vector<std::shared_ptr<Session>> list() const;
  void stop_all();
  const ServiceOptions& options() const noexcept { return opts_; }

 private:
  ServiceOptions opts_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  long next_id_ = 1;
};

/// Blocking-I/O server, one thread per connection:
///   POST /sessions, POST /sessions/{id}/pause|resume|stop,
///   GET /sessions, GET /sessions/{id}/summary, GET /health,
///   WS /sessions/{id}/stream, WS /sessions/{id}/target.
class Server {
 public:
  explicit Server(ServiceOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting; returns the bound port.
  unsigned short start();
  void stop();
  unsigned short port() const noexcept { return port_; }
  SessionManager& sessions() noexcept { return manager_; }

 private:
  struct Impl;
  SessionManager manager_;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
};

/// Runs a server until SIGINT or SIGTERM.
int run_service(const ServiceOptions& opts);

}  // namespace apnet
