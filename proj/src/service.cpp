#include "apnet/service.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <list>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "apnet/errors.hpp"

namespace apnet {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kInvalidEdge:
    case ErrorKind::kDisconnectedGraph:
    case ErrorKind::kAllZeroK:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kInvalidSpectrum:
    case ErrorKind::kDegenerateSites: return 400;
    case ErrorKind::kSessionNotFound: return 404;
    case ErrorKind::kSessionLimitReached:
    case ErrorKind::kSessionNotRunning:
    case ErrorKind::kStaleSequence: return 409;
    default: return 500;
  }
}

namespace {

json error_json(ErrorKind kind, const std::string& message) {
  return json{{"error", std::string(to_string(kind))}, {"message", message}};
}

json session_json(const Session& s) {
  return json{{"id", s.id()},
              {"status", std::string(to_string(s.status()))},
              {"name", s.config().name},
              {"t", s.sim_time()},
              {"clients", s.client_count()},
              {"seq", s.last_seq()}};
}

std::vector<std::string> split_path(std::string_view target) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char ch : target) {
    if (ch == '?') break;
    if (ch == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::string query_value(std::string_view target, const std::string& key) {
  std::string query;
  bool in_query = false;
  for (const char ch : target) {
    if (in_query) query.push_back(ch);
    else if (ch == '?') in_query = true;
  }
  std::string pair;
  query.push_back('&');
  for (const char ch : query) {
    if (ch != '&') {
      pair.push_back(ch);
      continue;
    }
    const auto eq = pair.find('=');
    if (pair.substr(0, eq) == key) return eq == std::string::npos ? std::string() : pair.substr(eq + 1);
    pair.clear();
  }
  return {};
}

}  // namespace

SessionManager::~SessionManager() { stop_all(); }

std::shared_ptr<Session> SessionManager::create(const std::string& body, bool autostart) {
  ScenarioConfig cfg;
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) {
    cfg = sec5_default_scenario();
  } else {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      fail(ErrorKind::kInvalidConfig, std::string("config body is not JSON: ") + e.what());
    }
    cfg = scenario_from_json(j);
  }
  cfg.target.mode = TargetConfig::Mode::kExternal;
  cfg.target.replay_log.clear();
  if (opts_.v_max > 0.0) cfg.target.v_max = opts_.v_max;
  cfg.validate();

  std::lock_guard lock(mu_);
  int live = 0;
  for (const auto& [id, s] : sessions_) live += s->active() ? 1 : 0;
  if (live >= opts_.max_sessions) {
    fail(ErrorKind::kSessionLimitReached, "session limit of " + std::to_string(opts_.max_sessions) + " reached");
  }
  const std::string id = "s" + std::to_string(next_id_++);
  auto s = std::make_shared<Session>(id, std::move(cfg), opts_);
  if (autostart) s->start();
  sessions_[id] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorKind::kSessionNotFound, "no session " + id);
  return it->second;
}

std::vector<std::shared_ptr<Session>> SessionManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

void SessionManager::stop_all() {
  for (const auto& s : list()) s->stop();
}

struct Server::Impl {
  struct Connection {
    std::shared_ptr<tcp::socket> socket;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  explicit Impl(SessionManager& m) : manager(m), acceptor(ioc) {}

  SessionManager& manager;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread accept_thread;
  std::atomic<bool> stopping{false};
  std::mutex conn_mu;
  std::list<Connection> connections;

  void accept_loop();
  void reap();
  void handle(const std::shared_ptr<tcp::socket>& socket);
  http::response<http::string_body> route(const http::request<http::string_body>& req);
  void handle_websocket(tcp::socket& socket, const http::request<http::string_body>& req);
};

void Server::Impl::reap() {
  std::lock_guard lock(conn_mu);
  for (auto it = connections.begin(); it != connections.end();) {
    if (it->done) {
      if (it->thread.joinable()) it->thread.join();
      it = connections.erase(it);
    } else {
      ++it;
    }
  }
}

void Server::Impl::accept_loop() {
  while (!stopping) {
    auto socket = std::make_shared<tcp::socket>(ioc);
    beast::error_code ec;
    acceptor.accept(*socket, ec);
    if (stopping) break;
    if (ec) continue;
    socket->set_option(tcp::no_delay(true), ec);
    reap();
    std::lock_guard lock(conn_mu);
    Connection& c = connections.emplace_back();
    c.socket = socket;
    c.thread = std::thread([this, socket, &c] {
      handle(socket);
      c.done = true;
    });
  }
}

void Server::Impl::handle(const std::shared_ptr<tcp::socket>& socket) {
  beast::flat_buffer buffer;
  beast::error_code ec;
  for (;;) {
    http::request<http::string_body> req;
    http::read(*socket, buffer, req, ec);
    if (ec) break;
    if (websocket::is_upgrade(req)) {
      handle_websocket(*socket, req);
      break;
    }
    auto res = route(req);
    res.keep_alive(req.keep_alive());
    res.prepare_payload();
    http::write(*socket, res, ec);
    if (ec || !req.keep_alive()) break;
  }
  socket->shutdown(tcp::socket::shutdown_both, ec);
}

http::response<http::string_body> Server::Impl::route(const http::request<http::string_body>& req) {
  const auto respond = [&](int status, const json& body) {
    http::response<http::string_body> res{static_cast<http::status>(status), req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.body() = body.dump();
    return res;
  };
  const std::string_view target(req.target().data(), req.target().size());
  const auto parts = split_path(target);
  const auto method = req.method();
  try {
    if (parts.size() == 1 && parts[0] == "health" && method == http::verb::get) {
      return respond(200, json{{"ok", true}});
    }
    if (!parts.empty() && parts[0] == "sessions") {
      if (parts.size() == 1 && method == http::verb::post) {
        const bool autostart = query_value(target, "start") != "0";
        const auto s = manager.create(req.body(), autostart);
        return respond(200, session_json(*s));
      }
      if (parts.size() == 1 && method == http::verb::get) {
        json arr = json::array();
        for (const auto& s : manager.list()) arr.push_back(session_json(*s));
        return respond(200, json{{"sessions", arr}});
      }
      if (parts.size() == 2 && method == http::verb::get) return respond(200, session_json(*manager.get(parts[1])));
      if (parts.size() == 3) {
        const auto s = manager.get(parts[1]);
        const std::string& action = parts[2];
        if (method == http::verb::get && action == "summary") return respond(200, s->summary());
        if (method == http::verb::post) {
          if (action == "start") s->start();
          else if (action == "pause") s->pause();
          else if (action == "resume") s->resume();
          else if (action == "stop") s->stop();
          else return respond(404, error_json(ErrorKind::kSessionNotFound, "unknown action " + action));
          return respond(200, session_json(*s));
        }
      }
    }
    if (method == http::verb::options) return respond(204, json::object());
    return respond(404, json{{"error", "NotFound"}, {"message", std::string(target)}});
  } catch (const Error& e) {
    return respond(http_status(e.kind()), error_json(e.kind(), e.what()));
  } catch (const std::exception& e) {
    return respond(500, json{{"error", "Internal"}, {"message", e.what()}});
  }
}

void Server::Impl::handle_websocket(tcp::socket& socket, const http::request<http::string_body>& req) {
  const std::string_view target(req.target().data(), req.target().size());
  const auto parts = split_path(target);
  beast::error_code ec;
  std::shared_ptr<Session> session;
  try {
    if (parts.size() != 3 || parts[0] != "sessions" || (parts[2] != "stream" && parts[2] != "target")) {
      fail(ErrorKind::kSessionNotFound, "no websocket route " + std::string(target));
    }
    session = manager.get(parts[1]);
  } catch (const Error& e) {
    http::response<http::string_body> res{http::status::not_found, req.version()};
    res.set(http::field::content_type, "application/json");
    res.body() = error_json(e.kind(), e.what()).dump();
    res.prepare_payload();
    http::write(socket, res, ec);
    socket.shutdown(tcp::socket::shutdown_both, ec);
    return;
  }

  websocket::stream<tcp::socket&> ws(socket);
  ws.accept(req, ec);
  if (ec) return;
  ws.text(true);

  if (parts[2] == "stream") {
    auto sub = session->subscribe();
    while (!stopping) {
      // Inbound frames on the stream are only control traffic; reading them
      // here answers a client close without a second thread on the socket.
      if (socket.available(ec) > 0) {
        beast::flat_buffer discard;
        ws.read(discard, ec);
        if (ec) break;
      }
      const auto msg = sub->pop(std::chrono::milliseconds(100));
      if (!msg) {
        if (sub->closed()) break;
        continue;
      }
      ws.write(net::buffer(**msg), ec);
      if (ec) break;
    }
    session->unsubscribe(sub);
  } else {
    while (!stopping) {
      beast::flat_buffer buf;
      ws.read(buf, ec);
      if (ec) break;
      json reply;
      try {
        json j;
        try {
          j = json::parse(beast::buffers_to_string(buf.data()));
        } catch (const json::exception& e) {
          fail(ErrorKind::kInvalidConfig, std::string("command is not JSON: ") + e.what());
        }
        reply = ack_json(session->ingest(parse_target_command(j)));
      } catch (const Error& e) {
        reply = error_json(e.kind(), e.what());
        reply["type"] = "error";
      }
      ws.write(net::buffer(reply.dump()), ec);
      if (ec) break;
    }
  }
  ws.close(websocket::close_code::normal, ec);
}

Server::Server(ServiceOptions opts) : manager_(std::move(opts)), impl_(std::make_unique<Impl>(manager_)) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  const ServiceOptions& o = manager_.options();
  beast::error_code ec;
  const auto address = net::ip::make_address(o.bind_address, ec);
  if (ec) fail(ErrorKind::kInvalidConfig, "bad bind address " + o.bind_address);
  const tcp::endpoint ep{address, o.port};
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot listen on " + o.bind_address + ":" + std::to_string(o.port) + ": " + ec.message());
  port_ = impl_->acceptor.local_endpoint().port();
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
  return port_;
}

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  beast::error_code ec;
  if (impl_->accept_thread.joinable()) {
    // Wake the blocking accept with a throwaway connection.
    tcp::socket poke(impl_->ioc);
    poke.connect(impl_->acceptor.local_endpoint(), ec);
    impl_->accept_thread.join();
  }
  impl_->acceptor.close(ec);
  manager_.stop_all();
  {
    std::lock_guard lock(impl_->conn_mu);
    for (auto& c : impl_->connections) c.socket->shutdown(tcp::socket::shutdown_both, ec);
  }
  std::lock_guard lock(impl_->conn_mu);
  for (auto& c : impl_->connections) {
    if (c.thread.joinable()) c.thread.join();
  }
  impl_->connections.clear();
}

int run_service(const ServiceOptions& opts) {
  Server server(opts);
  const unsigned short port = server.start();
  std::printf("apnet service listening on http://%s:%u\n", opts.bind_address.c_str(), port);
  std::fflush(stdout);
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](const beast::error_code&, int) {});
  signals_ctx.run();
  std::printf("shutting down\n");
  server.stop();
  return 0;
}

}  // namespace apnet
