#include "loa/server.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "loa/rulebook.hpp"
#include "loa/snapshot.hpp"

namespace loa {

namespace {

constexpr std::string_view kGame = "coin_collector";

using json = nlohmann::json;

ServiceError bad_request(const std::string& message) { return {400, "bad_request", message}; }

json facts_json(const FactSet& facts) { return fact_labels(facts); }

Layout layout_from_request(const json& request) {
  try {
    if (request.contains("layout")) {
      const json& layout = request.at("layout");
      if (layout.is_string()) {
        if (layout.get<std::string>() == "fix_a") return fixture_fix_a();
        throw bad_request("unknown layout '" + layout.get<std::string>() + "'");
      }
      if (layout.is_object()) return layout_from_json(layout);
      throw bad_request("layout must be \"fix_a\" or a layout object");
    }
    const int chain = request.value("chain_length", 5);
    const int branches = request.value("branches", 0);
    const auto seed = request.value("seed", std::uint64_t{0});
    return generate_layout(chain, branches, seed);
  } catch (const GameError& e) {
    throw bad_request(e.what());
  } catch (const json::exception& e) {
    throw bad_request(std::string("invalid layout options: ") + e.what());
  }
}

void refresh(Session& s) {
  s.facts = tracker_facts(s.tracker, s.found);
  s.decision = loa_decide(s.graph, s.facts);
}

bool valid_run_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

json run_summary(const std::string& id, const std::vector<EpisodeMetrics>& episodes) {
  RunMetrics run;
  run.episodes = episodes;
  const auto [first, last] = quintile_medians(run);
  int solved = 0;
  for (const EpisodeMetrics& m : episodes) solved += m.solved;
  return {{"id", id},
          {"episodes", episodes.size()},
          {"solved", solved},
          {"median_steps", median_steps(episodes)},
          {"first_quintile_median", first},
          {"last_quintile_median", last}};
}

std::vector<EpisodeMetrics> read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return metrics_from_jsonl(buf.str());
}

}  // namespace

json ServiceError::payload() const { return {{"error", {{"code", code_}, {"message", what()}}}}; }

json recommendations_json(const std::vector<Recommendation>& recs) {
  json out = json::array();
  for (const Recommendation& r : recs)
    out.push_back({{"action", r.action}, {"lower", r.lower}, {"upper", r.upper}, {"recommended", r.recommended}});
  return out;
}

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) : options_(std::move(options)) {
  id_state_ = options_.id_seed ? *options_.id_seed : std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);
}

std::chrono::steady_clock::time_point SessionService::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

std::string SessionService::new_id() {
  Lcg rng(id_state_);
  std::string id;
  do {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << rng.next();
    id = out.str();
  } while (sessions_.contains(id));
  id_state_ = rng.state();
  return id;
}

std::size_t SessionService::expire_idle() {
  std::lock_guard lock(mutex_);
  const auto t = now();
  return std::erase_if(sessions_, [&](const auto& kv) {
    std::unique_lock busy(kv.second->busy, std::try_to_lock);
    return busy.owns_lock() && t - kv.second->last_access > options_.idle_ttl;
  });
}

std::size_t SessionService::session_count() {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<Session> SessionService::lookup(const std::string& id) {
  expire_idle();
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + id + "'");
  return it->second;
}

json SessionService::create_session(const json& request) {
  if (!request.is_object()) throw bad_request("request body must be a JSON object");
  const std::string game = request.value("game", std::string(kGame));
  if (game != kGame) throw ServiceError(404, "unknown_game", "unknown game '" + game + "'");
  const std::string rulebook = request.value("rulebook", std::string("avoid_revisit"));
  const auto& names = builtin_rulebook_names();
  if (std::find(names.begin(), names.end(), rulebook) == names.end())
    throw ServiceError(404, "unknown_rulebook", "unknown rulebook '" + rulebook + "'");
  const int max_steps = request.value("max_steps", kDefaultMaxSteps);
  if (max_steps < 1) throw bad_request("max_steps must be positive");

  auto session = std::make_shared<Session>();
  session->game = game;
  session->rulebook = rulebook;
  auto [state, obs] = new_game(layout_from_request(request), max_steps);
  session->state = std::move(state);
  session->observation = obs.text;
  session->tracker = Tracker::start(obs.text);
  session->found = parse_observation(obs.text);
  session->graph = compile(builtin_rulebook(rulebook));
  refresh(*session);

  expire_idle();
  std::lock_guard lock(mutex_);
  session->id = new_id();
  session->last_access = now();
  sessions_.emplace(session->id, session);
  return {{"session", session->id},
          {"game", session->game},
          {"rulebook", session->rulebook},
          {"observation", session->observation},
          {"reward", 0.0},
          {"score", session->state.score},
          {"done", session->state.done},
          {"facts", facts_json(session->facts)},
          {"recommendations", recommendations_json(session->decision.recommendations)},
          {"lnn", export_snapshot(session->graph)}};
}

json SessionService::step_session(const std::string& id, const json& request) {
  auto session = lookup(id);
  std::unique_lock busy(session->busy, std::try_to_lock);
  if (!busy.owns_lock()) throw ServiceError(409, "session_busy", "session '" + id + "' is handling another step");
  session->last_access = now();
  if (options_.on_step) options_.on_step(id);
  if (session->state.done) throw ServiceError(409, "session_done", "session '" + id + "' has finished");
  if (!request.is_object() || !request.contains("command") || !request["command"].is_string())
    throw bad_request("step requires a \"command\" string");

  const Command command = parse_command(request["command"].get<std::string>());
  auto [next, obs] = step(session->state, command);
  session->state = std::move(next);
  session->observation = obs.text;
  session->tracker = update_tracker(std::move(session->tracker), command, obs.text);
  if (parse_room_header(obs.text)) session->found = parse_observation(obs.text);
  refresh(*session);
  session->history.push_back({obs.text, command.label(), obs.reward, session->decision.recommendations});

  return {{"observation", obs.text},
          {"reward", obs.reward},
          {"score", obs.score},
          {"done", obs.done},
          {"facts", facts_json(session->facts)},
          {"recommendations", recommendations_json(session->decision.recommendations)},
          {"lnn", export_snapshot(session->graph)}};
}

json SessionService::get_session(const std::string& id) {
  auto session = lookup(id);
  std::unique_lock busy(session->busy, std::try_to_lock);
  if (!busy.owns_lock()) throw ServiceError(409, "session_busy", "session '" + id + "' is handling another step");
  session->last_access = now();
  json history = json::array();
  for (const HistoryEntry& h : session->history) {
    history.push_back({{"observation", h.observation},
                       {"command", h.command},
                       {"reward", h.reward},
                       {"recommendations", recommendations_json(h.recommendations)}});
  }
  return {{"session", session->id},
          {"game", session->game},
          {"rulebook", session->rulebook},
          {"observation", session->observation},
          {"score", session->state.score},
          {"done", session->state.done},
          {"steps", session->state.steps},
          {"facts", facts_json(session->facts)},
          {"recommendations", recommendations_json(session->decision.recommendations)},
          {"history", std::move(history)}};
}

json SessionService::get_lnn(const std::string& id) {
  auto session = lookup(id);
  std::unique_lock busy(session->busy, std::try_to_lock);
  if (!busy.owns_lock()) throw ServiceError(409, "session_busy", "session '" + id + "' is handling another step");
  session->last_access = now();
  return export_snapshot(session->graph);
}

json SessionService::list_games() const {
  return {{"games", json::array({{{"id", kGame},
                                  {"rulebooks", builtin_rulebook_names()},
                                  {"default_rulebook", "avoid_revisit"},
                                  {"layouts", json::array({"fix_a", "generated"})}}})}};
}

json SessionService::list_runs() const {
  json runs = json::array();
  std::error_code ec;
  if (std::filesystem::is_directory(options_.runs_dir, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(options_.runs_dir, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        runs.push_back(run_summary(f.stem().string(), read_run(f)));
      } catch (const std::exception&) {
        // not a metrics file
      }
    }
  }
  return {{"runs", std::move(runs)}};
}

json SessionService::get_run(const std::string& run_id) const {
  const auto path = options_.runs_dir / (run_id + ".jsonl");
  if (!valid_run_id(run_id) || !std::filesystem::is_regular_file(path))
    throw ServiceError(404, "unknown_run", "no run '" + run_id + "'");
  std::vector<EpisodeMetrics> episodes;
  try {
    episodes = read_run(path);
  } catch (const std::exception& e) {
    throw ServiceError(404, "unknown_run", "run '" + run_id + "' is not a metrics file");
  }
  json out = run_summary(run_id, episodes);
  json rows = json::array();
  for (std::size_t i = 0; i < episodes.size(); ++i)
    rows.push_back({{"episode", i + 1}, {"steps", episodes[i].steps}, {"return", episodes[i].ret},
                    {"solved", episodes[i].solved}});
  out["episodes"] = std::move(rows);
  return out;
}

ServiceResponse SessionService::handle(std::string_view method, std::string_view path, std::string_view body) {
  static const std::regex session_re(R"(^/api/sessions/([^/]+)$)");
  static const std::regex step_re(R"(^/api/sessions/([^/]+)/step$)");
  static const std::regex lnn_re(R"(^/api/sessions/([^/]+)/lnn$)");
  static const std::regex run_re(R"(^/api/runs/([^/]+)$)");

  auto parse_body = [&]() {
    if (body.empty()) return json::object();
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw bad_request(std::string("malformed JSON body: ") + e.what());
    }
  };

  const std::string p(path);
  std::smatch m;
  try {
    if (method == "POST" && p == "/api/sessions") return {201, create_session(parse_body())};
    if (method == "POST" && std::regex_match(p, m, step_re)) return {200, step_session(m[1], parse_body())};
    if (method == "GET" && std::regex_match(p, m, lnn_re)) return {200, get_lnn(m[1])};
    if (method == "GET" && std::regex_match(p, m, session_re)) return {200, get_session(m[1])};
    if (method == "GET" && p == "/api/games") return {200, list_games()};
    if (method == "GET" && p == "/api/runs") return {200, list_runs()};
    if (method == "GET" && std::regex_match(p, m, run_re)) return {200, get_run(m[1])};
    throw ServiceError(404, "not_found", "no route for " + std::string(method) + " " + p);
  } catch (const ServiceError& e) {
    return {e.status(), e.payload()};
  } catch (const std::exception& e) {
    const ServiceError internal(500, "internal", e.what());
    return {500, internal.payload()};
  }
}

HttpServer::HttpServer(SessionService& service, Options options)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse out = service_.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  // no SO_REUSEPORT: a second server on a busy port must fail
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server_->Get(R"(/api/.*)", route);
  server_->Post(R"(/api/.*)", route);
  if (options.ui_dir) server_->set_mount_point("/", options.ui_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace loa
