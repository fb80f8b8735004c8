#pragma once

// The decision loop: facts go into the network, bounds come out as action
// recommendations, the chosen command is executed, and the reward trains the
// network. Random and tabular Q-learning agents share the same harness for
// comparison runs.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loa/game.hpp"
#include "loa/lnn.hpp"
#include "loa/parser.hpp"
#include "loa/rng.hpp"

namespace loa {

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kActionCount = 5;

// go north, go east, go south, go west, take coin.
const std::vector<Command>& default_tie_order();
std::size_t action_slot(const Command& command);  // position in default_tie_order
std::string action_node_id(const Command& command);
std::optional<Command> command_for_node(std::string_view node_id);

struct Recommendation {
  std::string action;  // command label, e.g. "go north"
  double lower = 0.0;
  double upper = 1.0;
  bool recommended = false;
  bool operator==(const Recommendation&) const = default;
};

struct AgentConfig {
  double tau = 0.5;
  std::vector<Command> tie_order = default_tie_order();
  double explore_epsilon = 0.0;
};

struct Decision {
  Command chosen;
  std::vector<Recommendation> recommendations;  // in the graph's action order
  InferenceReport report;
};

// Actions the facts make possible, in tie order: go d for each found(d), and
// take coin when coin_here holds.
std::vector<Command> applicable_actions(const FactSet& facts, const std::vector<Command>& tie_order = default_tie_order());

// Loads the facts into the network and reads off the action bounds. Facts are
// asserted true; absent facts stay unknown except visited(d) for an observed
// exit d, which the tracker settles and is therefore asserted false.
Decision loa_decide(Graph& graph, const FactSet& facts, const AgentConfig& config = {});

struct Transition {
  FactSet facts;
  Command action;
  double reward = 0.0;
  bool done = false;
};

double loa_observe(Graph& graph, const Transition& transition, const TrainConfig& config = {});

Command random_decide(const FactSet& facts, Lcg& rng);

struct QTable {
  std::map<std::string, std::array<double, kActionCount>> values;
  double alpha = 0.5;
  double gamma = 0.9;
  double epsilon_greedy = 0.1;

  static std::string state_key(const FactSet& facts);
  double get(const FactSet& facts, const Command& action) const;
};

Command q_decide(const QTable& table, const FactSet& facts, Lcg& rng);
void q_update(QTable& table, const Transition& transition, const FactSet& next_facts);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual Command decide(const FactSet& facts) = 0;
  virtual void observe(const Transition& transition, const FactSet& next_facts) = 0;
};

class LoaAgent : public Agent {
 public:
  LoaAgent(std::string rulebook, Graph graph, std::uint64_t seed, AgentConfig config = {}, TrainConfig train = {});
  std::string name() const override { return "loa(" + rulebook_ + ")"; }
  Command decide(const FactSet& facts) override;
  void observe(const Transition& transition, const FactSet& next_facts) override;

  const Graph& graph() const { return graph_; }
  const Decision& last_decision() const { return last_; }

 private:
  std::string rulebook_;
  Graph graph_;
  AgentConfig config_;
  TrainConfig train_;
  Lcg rng_;
  Decision last_;
};

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  Command decide(const FactSet& facts) override { return random_decide(facts, rng_); }
  void observe(const Transition&, const FactSet&) override {}

 private:
  Lcg rng_;
};

class TabularQAgent : public Agent {
 public:
  explicit TabularQAgent(std::uint64_t seed, QTable table = {}) : table_(std::move(table)), rng_(seed) {}
  std::string name() const override { return "tabq"; }
  Command decide(const FactSet& facts) override { return q_decide(table_, facts, rng_); }
  void observe(const Transition& transition, const FactSet& next_facts) override {
    q_update(table_, transition, next_facts);
  }
  const QTable& table() const { return table_; }

 private:
  QTable table_;
  Lcg rng_;
};

struct AgentSpec {
  enum class Kind { Loa, Random, TabQ };
  Kind kind = Kind::Loa;
  std::string rulebook = "avoid_revisit";

  // "loa", "loa(simple_nav)", "random", "tabq".
  static AgentSpec parse(std::string_view text);
  std::string name() const;
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::uint64_t seed);

struct EpisodeStep {
  int t = 0;
  std::string observation;
  FactSet facts;
  Command action;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  int final_score = 0;
  bool solved = false;
};

EpisodeLog run_episode(const Layout& layout, Agent& agent, int max_steps = kDefaultMaxSteps);
EpisodeLog run_episode(const Layout& layout, const AgentSpec& spec, std::uint64_t seed,
                       int max_steps = kDefaultMaxSteps);

// Re-executes a log's commands and returns the rewards the game hands back.
std::vector<double> replay_rewards(const Layout& layout, const EpisodeLog& log, int max_steps = kDefaultMaxSteps);

struct EpisodeMetrics {
  int steps = 0;
  double ret = 0.0;
  bool solved = false;
  bool operator==(const EpisodeMetrics&) const = default;
};

struct RunMetrics {
  std::string agent_name;
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> episodes;
};

// Either a fixed layout or generator parameters seeded by the run seed.
struct LayoutSpec {
  std::optional<Layout> fixed;
  int chain_length = 5;
  int branches = 0;

  Layout resolve(std::uint64_t seed) const;
};

RunMetrics train_run(const LayoutSpec& layout, const AgentSpec& agent, int episodes, std::uint64_t seed,
                     int max_steps = kDefaultMaxSteps);

double median(std::vector<double> values);
double median_steps(std::span<const EpisodeMetrics> episodes);

// Median steps over the first and the last fifth of the episodes (at least one each).
std::pair<double, double> quintile_medians(const RunMetrics& run);

std::string to_jsonl(const RunMetrics& run);
std::string to_jsonl(const EpisodeLog& log);
std::vector<EpisodeMetrics> metrics_from_jsonl(std::string_view text);

struct ComparisonRow {
  std::string agent;
  double median_steps = 0.0;
  double mean_steps = 0.0;
  double solved_rate = 0.0;
  double first_quintile = 0.0;
  double last_quintile = 0.0;
  RunMetrics run;
};

// Same layout and seed for every agent; rows sorted by median steps, ties by input order.
std::vector<ComparisonRow> compare_agents(const LayoutSpec& layout, const std::vector<AgentSpec>& agents,
                                          int episodes, std::uint64_t seed, int max_steps = kDefaultMaxSteps);
std::string format_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace loa
