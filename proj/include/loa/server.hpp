#pragma once

// Session service behind the HTTP API. SessionService owns the in-memory
// session store and answers routed requests with JSON; HttpServer is a thin
// transport over it.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "loa/agent.hpp"
#include "loa/game.hpp"
#include "loa/lnn.hpp"
#include "loa/parser.hpp"

namespace httplib {
class Server;
}

namespace loa {

// Carries the HTTP status and the stable error code of the error payload.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  nlohmann::json payload() const;

 private:
  int status_;
  std::string code_;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

struct HistoryEntry {
  std::string observation;
  std::string command;
  double reward = 0.0;
  std::vector<Recommendation> recommendations;
};

struct Session {
  std::string id;
  std::string game;
  std::string rulebook;
  GameState state;
  std::string observation;
  Tracker tracker;
  FactSet found;
  FactSet facts;
  Graph graph;
  Decision decision;
  std::vector<HistoryEntry> history;
  std::chrono::steady_clock::time_point last_access;
  std::mutex busy;
};

class SessionService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  struct Options {
    std::filesystem::path runs_dir = "runs";
    std::chrono::seconds idle_ttl{3600};
    Clock clock;                      // defaults to steady_clock::now
    std::optional<std::uint64_t> id_seed;  // fixed seed for reproducible session ids
    std::function<void(const std::string&)> on_step;  // runs while a step holds its session
  };

  SessionService();
  explicit SessionService(Options options);

  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json step_session(const std::string& id, const nlohmann::json& request);
  nlohmann::json get_session(const std::string& id);
  nlohmann::json get_lnn(const std::string& id);
  nlohmann::json list_games() const;
  nlohmann::json list_runs() const;
  nlohmann::json get_run(const std::string& run_id) const;

  // Routes "/api/..." requests; errors become error payloads.
  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body);

  std::size_t session_count();
  std::size_t expire_idle();

 private:
  std::shared_ptr<Session> lookup(const std::string& id);
  std::string new_id();
  std::chrono::steady_clock::time_point now() const;

  Options options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_state_;
};

nlohmann::json recommendations_json(const std::vector<Recommendation>& recs);

class HttpServer {
 public:
  struct Options {
    std::optional<std::filesystem::path> ui_dir;
  };

  HttpServer(SessionService& service, Options options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace loa
