#include "loa/agent.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "loa/rulebook.hpp"

namespace loa {

const std::vector<Command>& default_tie_order() {
  static const std::vector<Command> order = {Command::go(Direction::North), Command::go(Direction::East),
                                             Command::go(Direction::South), Command::go(Direction::West),
                                             Command::take_coin()};
  return order;
}

std::size_t action_slot(const Command& command) {
  switch (command.kind) {
    case Command::Kind::Go: return static_cast<std::size_t>(command.direction);
    case Command::Kind::TakeCoin: return 4;
    case Command::Kind::Invalid: break;
  }
  throw AgentError("'" + command.text + "' is not an agent action");
}

std::string action_node_id(const Command& command) {
  if (command.kind == Command::Kind::Go) return "go(" + std::string(to_string(command.direction)) + ")";
  if (command.kind == Command::Kind::TakeCoin) return "take_coin";
  throw AgentError("'" + command.text + "' is not an agent action");
}

std::optional<Command> command_for_node(std::string_view node_id) {
  for (const Command& c : default_tie_order())
    if (action_node_id(c) == node_id) return c;
  return std::nullopt;
}

std::vector<Command> applicable_actions(const FactSet& facts, const std::vector<Command>& tie_order) {
  std::vector<Command> out;
  for (const Command& c : tie_order) {
    const bool ok = c.kind == Command::Kind::Go ? facts.contains(Fact::found(c.direction))
                                                : c.kind == Command::Kind::TakeCoin && facts.contains(Fact::coin_here());
    if (ok) out.push_back(c);
  }
  return out;
}

namespace {

std::string predicate_prefix(const std::string& label) {
  const auto open = label.find('(');
  return open == std::string::npos ? label : label.substr(0, open + 1);
}

}  // namespace

Decision loa_decide(Graph& graph, const FactSet& facts, const AgentConfig& config) {
  graph.clear_facts();
  graph.reset_bounds();

  // A fact whose predicate the network never mentions is irrelevant to this
  // rulebook; a known predicate with a missing grounding is a mismatch.
  const auto& index = graph.fact_index();
  auto assert_fact = [&](const Fact& fact, TruthBounds bounds) {
    const std::string label = fact.label();
    auto it = index.find(label);
    if (it != index.end()) {
      graph.set_fact(graph.node(it->second).id, bounds);
      return;
    }
    const std::string prefix = predicate_prefix(label);
    for (const auto& [known, _] : index) {
      if (known.rfind(prefix, 0) == 0)
        throw AgentError("fact '" + label + "' has no proposition node in the network");
    }
  };
  for (const Fact& fact : facts) assert_fact(fact, TruthBounds::truth());
  for (const Fact& fact : facts) {
    if (fact.predicate != Predicate::Found) continue;
    const Fact visited = Fact::visited(*fact.arg);
    if (!facts.contains(visited) && index.contains(visited.label())) assert_fact(visited, TruthBounds::falsity());
  }

  Decision decision;
  decision.report = graph.infer();
  for (std::size_t a : graph.actions()) {
    const LnnNode& node = graph.node(a);
    Recommendation rec;
    const auto command = command_for_node(node.id);
    rec.action = command ? command->label() : node.label;
    rec.lower = node.bounds.lower;
    rec.upper = node.bounds.upper;
    rec.recommended = rec.lower >= config.tau && rec.upper >= config.tau;
    decision.recommendations.push_back(std::move(rec));
  }

  for (const Command& c : config.tie_order) {
    const std::string label = c.label();
    auto it = std::find_if(decision.recommendations.begin(), decision.recommendations.end(),
                           [&](const Recommendation& r) { return r.action == label; });
    if (it != decision.recommendations.end() && it->recommended) {
      decision.chosen = c;
      return decision;
    }
  }
  const auto applicable = applicable_actions(facts, config.tie_order);
  decision.chosen = applicable.empty() ? config.tie_order.front() : applicable.front();
  return decision;
}

double loa_observe(Graph& graph, const Transition& transition, const TrainConfig& config) {
  return graph.train_step(action_node_id(transition.action), transition.reward, config);
}

Command random_decide(const FactSet& facts, Lcg& rng) {
  auto options = applicable_actions(facts);
  if (options.empty()) options = default_tie_order();
  return options[rng.pick(options.size())];
}

std::string QTable::state_key(const FactSet& facts) {
  std::vector<std::string> labels = fact_labels(facts);
  std::sort(labels.begin(), labels.end());
  std::string key;
  for (const std::string& l : labels) {
    if (!key.empty()) key += ',';
    key += l;
  }
  return key;
}

double QTable::get(const FactSet& facts, const Command& action) const {
  auto it = values.find(state_key(facts));
  return it == values.end() ? 0.0 : it->second[action_slot(action)];
}

Command q_decide(const QTable& table, const FactSet& facts, Lcg& rng) {
  auto options = applicable_actions(facts);
  if (options.empty()) options = default_tie_order();
  if (rng.uniform() < table.epsilon_greedy) return options[rng.pick(options.size())];
  Command best = options.front();
  double best_value = table.get(facts, best);
  for (const Command& c : options) {
    const double v = table.get(facts, c);
    if (v > best_value) {
      best = c;
      best_value = v;
    }
  }
  return best;
}

void q_update(QTable& table, const Transition& transition, const FactSet& next_facts) {
  double future = 0.0;
  if (!transition.done) {
    auto options = applicable_actions(next_facts);
    if (options.empty()) options = default_tie_order();
    future = table.get(next_facts, options.front());
    for (const Command& c : options) future = std::max(future, table.get(next_facts, c));
  }
  auto& row = table.values[QTable::state_key(transition.facts)];
  double& q = row[action_slot(transition.action)];
  q += table.alpha * (transition.reward + table.gamma * future - q);
}

LoaAgent::LoaAgent(std::string rulebook, Graph graph, std::uint64_t seed, AgentConfig config, TrainConfig train)
    : rulebook_(std::move(rulebook)), graph_(std::move(graph)), config_(std::move(config)), train_(train), rng_(seed) {}

Command LoaAgent::decide(const FactSet& facts) {
  last_ = loa_decide(graph_, facts, config_);
  if (config_.explore_epsilon > 0.0 && rng_.uniform() < config_.explore_epsilon) {
    auto options = applicable_actions(facts, config_.tie_order);
    if (!options.empty()) last_.chosen = options[rng_.pick(options.size())];
  }
  return last_.chosen;
}

void LoaAgent::observe(const Transition& transition, const FactSet&) {
  const auto node = graph_.find(action_node_id(transition.action));
  if (node && graph_.is_action(*node)) loa_observe(graph_, transition, train_);
}

AgentSpec AgentSpec::parse(std::string_view text) {
  if (text == "random") return {Kind::Random, {}};
  if (text == "tabq") return {Kind::TabQ, {}};
  if (text == "loa") return {Kind::Loa, "avoid_revisit"};
  if (text.starts_with("loa(") && text.ends_with(")")) return {Kind::Loa, std::string(text.substr(4, text.size() - 5))};
  throw AgentError("unknown agent '" + std::string(text) + "'");
}

std::string AgentSpec::name() const {
  switch (kind) {
    case Kind::Loa: return "loa(" + rulebook + ")";
    case Kind::Random: return "random";
    case Kind::TabQ: return "tabq";
  }
  return "loa";
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case AgentSpec::Kind::Loa: {
      Rulebook book = resolve_rulebook(spec.rulebook);
      return std::make_unique<LoaAgent>(spec.rulebook, compile(book), seed);
    }
    case AgentSpec::Kind::Random: return std::make_unique<RandomAgent>(seed);
    case AgentSpec::Kind::TabQ: return std::make_unique<TabularQAgent>(seed);
  }
  throw AgentError("unknown agent kind");
}

EpisodeLog run_episode(const Layout& layout, Agent& agent, int max_steps) {
  auto [state, obs] = new_game(layout, max_steps);
  Tracker tracker = Tracker::start(obs.text);
  FactSet found = parse_observation(obs.text);
  FactSet facts = tracker_facts(tracker, found);

  EpisodeLog log;
  int t = 1;
  while (!state.done) {
    const Command command = agent.decide(facts);
    auto [next, next_obs] = step(state, command);
    tracker = update_tracker(std::move(tracker), command, next_obs.text);
    // Apologies carry no room description; the exits seen last still hold.
    if (parse_room_header(next_obs.text)) found = parse_observation(next_obs.text);
    const FactSet next_facts = tracker_facts(tracker, found);

    const Transition transition{facts, command, next_obs.reward, next_obs.done};
    agent.observe(transition, next_facts);
    log.steps.push_back({t++, obs.text, facts, command, next_obs.reward, next_obs.done});

    state = std::move(next);
    obs = std::move(next_obs);
    facts = next_facts;
  }
  log.final_score = state.score;
  log.solved = state.coin_taken;
  return log;
}

EpisodeLog run_episode(const Layout& layout, const AgentSpec& spec, std::uint64_t seed, int max_steps) {
  auto agent = make_agent(spec, seed);
  return run_episode(layout, *agent, max_steps);
}

std::vector<double> replay_rewards(const Layout& layout, const EpisodeLog& log, int max_steps) {
  auto [state, obs] = new_game(layout, max_steps);
  std::vector<double> rewards;
  for (const EpisodeStep& s : log.steps) {
    auto [next, next_obs] = step(state, s.action);
    rewards.push_back(next_obs.reward);
    state = std::move(next);
  }
  return rewards;
}

Layout LayoutSpec::resolve(std::uint64_t seed) const {
  if (fixed) return *fixed;
  return generate_layout(chain_length, branches, seed);
}

RunMetrics train_run(const LayoutSpec& layout_spec, const AgentSpec& spec, int episodes, std::uint64_t seed,
                     int max_steps) {
  if (episodes < 1) throw AgentError("episodes must be at least 1");
  const Layout layout = layout_spec.resolve(seed);
  auto agent = make_agent(spec, seed);
  RunMetrics run;
  run.agent_name = agent->name();
  run.seed = seed;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeLog log = run_episode(layout, *agent, max_steps);
    double ret = 0.0;
    for (const EpisodeStep& s : log.steps) ret += s.reward;
    run.episodes.push_back({static_cast<int>(log.steps.size()), ret, log.solved});
  }
  return run;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double median_steps(std::span<const EpisodeMetrics> episodes) {
  std::vector<double> steps;
  for (const EpisodeMetrics& m : episodes) steps.push_back(m.steps);
  return median(std::move(steps));
}

std::pair<double, double> quintile_medians(const RunMetrics& run) {
  const std::span<const EpisodeMetrics> all(run.episodes);
  const std::size_t n = std::max<std::size_t>(1, all.size() / 5);
  if (all.empty()) return {0.0, 0.0};
  return {median_steps(all.first(std::min(n, all.size()))), median_steps(all.last(std::min(n, all.size())))};
}

std::string to_jsonl(const RunMetrics& run) {
  std::string out;
  for (std::size_t i = 0; i < run.episodes.size(); ++i) {
    const EpisodeMetrics& m = run.episodes[i];
    nlohmann::ordered_json line = {
        {"episode", i + 1}, {"steps", m.steps}, {"return", m.ret}, {"solved", m.solved}};
    out += line.dump() + "\n";
  }
  return out;
}

std::string to_jsonl(const EpisodeLog& log) {
  std::string out;
  for (const EpisodeStep& s : log.steps) {
    nlohmann::ordered_json line = {{"t", s.t},           {"obs", s.observation},       {"facts", fact_labels(s.facts)},
                                   {"action", s.action.label()}, {"reward", s.reward}, {"done", s.done}};
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<EpisodeMetrics> metrics_from_jsonl(std::string_view text) {
  std::vector<EpisodeMetrics> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("steps").get<int>(), j.at("return").get<double>(), j.at("solved").get<bool>()});
  }
  return out;
}

std::vector<ComparisonRow> compare_agents(const LayoutSpec& layout, const std::vector<AgentSpec>& agents,
                                          int episodes, std::uint64_t seed, int max_steps) {
  std::vector<ComparisonRow> rows;
  for (const AgentSpec& spec : agents) {
    ComparisonRow row;
    row.run = train_run(layout, spec, episodes, seed, max_steps);
    row.agent = row.run.agent_name;
    row.median_steps = median_steps(row.run.episodes);
    double total = 0.0, solved = 0.0;
    for (const EpisodeMetrics& m : row.run.episodes) {
      total += m.steps;
      solved += m.solved ? 1.0 : 0.0;
    }
    row.mean_steps = total / static_cast<double>(row.run.episodes.size());
    row.solved_rate = solved / static_cast<double>(row.run.episodes.size());
    std::tie(row.first_quintile, row.last_quintile) = quintile_medians(row.run);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) { return a.median_steps < b.median_steps; });
  return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(26) << "agent" << std::right << std::setw(10) << "median" << std::setw(10) << "mean"
      << std::setw(10) << "solved" << std::setw(10) << "first" << std::setw(10) << "last" << "\n";
  out << std::fixed << std::setprecision(2);
  for (const ComparisonRow& r : rows) {
    out << std::left << std::setw(26) << r.agent << std::right << std::setw(10) << r.median_steps << std::setw(10)
        << r.mean_steps << std::setw(10) << r.solved_rate << std::setw(10) << r.first_quintile << std::setw(10)
        << r.last_quintile << "\n";
  }
  return out.str();
}

}  // namespace loa
