#include "loa/cli.hpp"

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "loa/agent.hpp"
#include "loa/rulebook.hpp"
#include "loa/server.hpp"
#include "loa/snapshot.hpp"

namespace loa {

namespace {

const CLI::Range kPositive(1, std::numeric_limits<int>::max());
const CLI::Range kNonNegative(0, std::numeric_limits<int>::max());

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayoutOptions {
  std::string game = "coin_collector";
  std::string layout;
  int chain_length = 5;
  int branches = 0;
  std::uint64_t seed = 0;
  int max_steps = kDefaultMaxSteps;

  void add(CLI::App* cmd) {
    cmd->add_option("--game", game, "Game to play")->capture_default_str();
    cmd->add_option("--layout", layout, "Layout JSON file, or fix_a for the three-room fixture");
    cmd->add_option("--chain-length", chain_length, "Moves from start to the coin room")
        ->check(kPositive)
        ->capture_default_str();
    cmd->add_option("--branches", branches, "Dead-end side rooms")->check(kNonNegative)->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for layout generation and agents")->capture_default_str();
    cmd->add_option("--max-steps", max_steps, "Step budget per episode")->check(kPositive)->capture_default_str();
  }

  void check_game() const {
    if (game != "coin_collector") throw UsageError("unknown game '" + game + "'");
  }

  LayoutSpec spec() const {
    check_game();
    LayoutSpec s;
    s.chain_length = chain_length;
    s.branches = branches;
    if (layout == "fix_a")
      s.fixed = fixture_fix_a();
    else if (!layout.empty())
      s.fixed = load_layout_file(layout);
    return s;
  }
};

Rulebook rulebook_or_usage(const std::string& name) {
  try {
    return resolve_rulebook(name);
  } catch (const RulebookError& e) {
    throw UsageError(e.what());
  }
}

AgentSpec agent_or_usage(const std::string& text, const std::string& rulebook) {
  try {
    AgentSpec spec = AgentSpec::parse(text);
    if (spec.kind == AgentSpec::Kind::Loa && text == "loa") spec.rulebook = rulebook;
    if (spec.kind == AgentSpec::Kind::Loa) rulebook_or_usage(spec.rulebook);
    return spec;
  } catch (const AgentError& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  return file;
}

void print_recommendations(std::ostream& out, const std::vector<Recommendation>& recs) {
  out << std::fixed << std::setprecision(3);
  for (const Recommendation& r : recs) {
    out << (r.recommended ? "  * " : "    ") << std::left << std::setw(10) << r.action << std::right << " ["
        << r.lower << ", " << r.upper << "]\n";
  }
  out << std::defaultfloat;
}

int cmd_play(const LayoutOptions& lo, const std::string& rulebook_name, std::istream& in, std::ostream& out) {
  const Rulebook book = rulebook_or_usage(rulebook_name);
  const LayoutSpec spec = lo.spec();
  Graph graph = compile(book);
  auto [state, obs] = new_game(spec.resolve(lo.seed), lo.max_steps);
  Tracker tracker = Tracker::start(obs.text);
  FactSet found = parse_observation(obs.text);

  out << obs.text << "\n";
  while (true) {
    const Decision decision = loa_decide(graph, tracker_facts(tracker, found));
    out << "Recommendations:\n";
    print_recommendations(out, decision.recommendations);
    out << "> " << std::flush;
    std::string line;
    if (!std::getline(in, line)) break;
    if (line == "quit" || line == "exit") break;
    const Command command = parse_command(line);
    auto [next, next_obs] = step(state, command);
    tracker = update_tracker(std::move(tracker), command, next_obs.text);
    if (parse_room_header(next_obs.text)) found = parse_observation(next_obs.text);
    state = std::move(next);
    out << next_obs.text << "\n"
        << "reward: " << next_obs.reward << "  score: " << next_obs.score << "\n";
    if (next_obs.done) {
      out << (state.coin_taken ? "You solved it in " : "Out of steps after ") << state.steps << " steps.\n";
      break;
    }
  }
  return kExitOk;
}

std::string summary_line(const RunMetrics& run, const Layout& layout) {
  const auto [first, last] = quintile_medians(run);
  int solved = 0;
  for (const auto& m : run.episodes) solved += m.solved;
  std::ostringstream out;
  out << "summary agent=" << run.agent_name << " episodes=" << run.episodes.size() << " solved=" << solved
      << " median_steps=" << median_steps(run.episodes) << " first_quintile=" << first << " last_quintile=" << last
      << " optimal=" << optimal_steps(layout);
  return out.str();
}

int cmd_train(const LayoutOptions& lo, const std::string& agent, const std::string& rulebook, int episodes,
              const std::string& out_path, std::ostream& out) {
  const AgentSpec spec = agent_or_usage(agent, rulebook);
  const LayoutSpec layout = lo.spec();
  const RunMetrics run = train_run(layout, spec, episodes, lo.seed, lo.max_steps);
  const std::string lines = to_jsonl(run);
  if (out_path.empty()) {
    out << lines;
  } else {
    auto file = open_out(out_path);
    file << lines;
  }
  out << summary_line(run, layout.resolve(lo.seed)) << "\n";
  return kExitOk;
}

std::string file_stem(std::string name) {
  for (char& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  while (!name.empty() && name.back() == '_') name.pop_back();
  return name;
}

int cmd_compare(const LayoutOptions& lo, const std::vector<std::string>& agents, const std::string& rulebook,
                int episodes, const std::string& out_dir, std::ostream& out) {
  std::vector<AgentSpec> specs;
  for (const std::string& a : agents) specs.push_back(agent_or_usage(a, rulebook));
  const LayoutSpec layout = lo.spec();
  const auto rows = compare_agents(layout, specs, episodes, lo.seed, lo.max_steps);
  const std::string table = format_comparison(rows);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const ComparisonRow& r : rows) {
      auto file = open_out((std::filesystem::path(out_dir) / (file_stem(r.agent) + ".jsonl")).string());
      file << to_jsonl(r.run);
    }
    auto file = open_out((std::filesystem::path(out_dir) / "comparison.txt").string());
    file << table;
  }
  out << "layout optimal steps: " << optimal_steps(layout.resolve(lo.seed)) << "\n" << table;
  return kExitOk;
}

int cmd_export(const std::string& rulebook, const std::vector<std::string>& fact_texts, const std::string& format,
               const std::string& out_path, std::ostream& out) {
  const Rulebook book = rulebook_or_usage(rulebook);
  FactSet facts;
  for (const std::string& text : fact_texts) {
    try {
      facts.insert(parse_fact(text));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  Graph graph = compile(book);
  loa_decide(graph, facts);
  const std::string body = format == "dot" ? export_dot(graph) : export_snapshot(graph).dump(2) + "\n";
  if (out_path.empty()) {
    out << body;
  } else {
    auto file = open_out(out_path);
    file << body;
  }
  return kExitOk;
}

HttpServer* g_server = nullptr;

extern "C" void handle_stop(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& ui_dir, const std::string& runs_dir,
              std::ostream& out, std::ostream& err) {
  SessionService::Options so;
  so.runs_dir = runs_dir;
  SessionService service(so);
  HttpServer::Options ho;
  if (!ui_dir.empty()) {
    if (!std::filesystem::is_directory(ui_dir)) throw UsageError("--ui-dir '" + ui_dir + "' is not a directory");
    ho.ui_dir = ui_dir;
  }
  HttpServer server(service, ho);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    err << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitFailure;
  }
  out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
  g_server = &server;
  std::signal(SIGINT, handle_stop);
  std::signal(SIGTERM, handle_stop);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logical-network agents for text-based games", "loa"};
  app.require_subcommand(1);

  LayoutOptions layout;
  std::string rulebook = "avoid_revisit";
  std::string agent = "loa";
  std::vector<std::string> agents = {"loa", "random", "tabq"};
  int episodes = 100;
  std::string out_path;
  std::string format = "json";
  std::vector<std::string> facts;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
  std::string runs_dir = "runs";

  auto* play = app.add_subcommand("play", "Play interactively with recommendations");
  layout.add(play);
  play->add_option("--rulebook", rulebook, "Builtin rulebook name or rulebook JSON file")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train one agent and write per-episode metrics");
  layout.add(train);
  train->add_option("--agent", agent, "loa, loa(RULEBOOK), random or tabq")->capture_default_str();
  train->add_option("--rulebook", rulebook, "Rulebook for the loa agent")->capture_default_str();
  train->add_option("--episodes", episodes, "Episode count")->check(kPositive)->capture_default_str();
  train->add_option("--out", out_path, "Metrics file (JSON lines); stdout when omitted");

  auto* compare = app.add_subcommand("compare", "Run several agents on the same layout and tabulate");
  layout.add(compare);
  compare->add_option("--agents", agents, "Comma-separated agent list")->delimiter(',')->capture_default_str();
  compare->add_option("--rulebook", rulebook, "Rulebook for the plain loa agent")->capture_default_str();
  compare->add_option("--episodes", episodes, "Episodes per agent")->check(kPositive)->capture_default_str();
  compare->add_option("--out", out_path, "Directory for per-agent metrics and the table");

  auto* exp = app.add_subcommand("export-lnn", "Write the network for a fact set as JSON or DOT");
  exp->add_option("--rulebook", rulebook, "Builtin rulebook name or rulebook JSON file")->capture_default_str();
  exp->add_option("--facts", facts, "Comma-separated facts, e.g. found(north),visited(south)")->delimiter(',');
  exp->add_option("--format", format, "json or dot")->check(CLI::IsMember({"json", "dot"}))->capture_default_str();
  exp->add_option("--out", out_path, "Output file; stdout when omitted");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API and serve the UI bundle");
  serve->add_option("--host", host, "Interface to bind")->capture_default_str();
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "Static UI bundle directory");
  serve->add_option("--runs-dir", runs_dir, "Directory of metrics files exposed under /api/runs")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (play->parsed()) return cmd_play(layout, rulebook, in, out);
    if (train->parsed()) return cmd_train(layout, agent, rulebook, episodes, out_path, out);
    if (compare->parsed()) return cmd_compare(layout, agents, rulebook, episodes, out_path, out);
    if (exp->parsed()) return cmd_export(rulebook, facts, format, out_path, out);
    if (serve->parsed()) return cmd_serve(host, port, ui_dir, runs_dir, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace loa
