#pragma once

// Propositional weighted real-valued logic network.
//
// Every node carries a [lower, upper] truth interval. Gates evaluate
// weighted Lukasiewicz activations upward from their children and push
// tightened intervals back down to their children through the inverse
// activations. Bounds only ever tighten during inference, and they are
// allowed to cross: a crossed interval is a contradiction and is reported,
// never repaired.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loa {

class LnnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TruthBounds {
  double lower = 0.0;
  double upper = 1.0;

  static constexpr TruthBounds unknown() { return {0.0, 1.0}; }
  static constexpr TruthBounds truth() { return {1.0, 1.0}; }
  static constexpr TruthBounds falsity() { return {0.0, 0.0}; }

  bool contradictory() const { return lower > upper; }
  double contradiction() const { return lower > upper ? lower - upper : 0.0; }

  bool operator==(const TruthBounds&) const = default;
};

enum class NodeKind { Proposition, And, Or, Not, Implies };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view text);

inline bool is_gate(NodeKind kind) { return kind != NodeKind::Proposition; }

// Display classification used by snapshots and visualisation.
enum class Truth { True, False, Unknown, Contradiction };

std::string_view to_string(Truth truth);
Truth classify(TruthBounds bounds);

using NodeId = std::string;

struct LnnNode {
  NodeId id;
  NodeKind kind = NodeKind::Proposition;
  std::string label;
  double beta = 1.0;
  TruthBounds bounds;
  bool asserted = false;
};

struct LnnEdge {
  NodeId parent;
  NodeId child;
  double weight = 1.0;
};

struct NodeSpec {
  NodeId id;
  NodeKind kind = NodeKind::Proposition;
  std::string label;  // defaults to id when empty
  double beta = 1.0;
  bool asserted = false;
  // Initial bounds. Asserted nodes default to [1,1], everything else to [0,1].
  std::optional<TruthBounds> bounds;
};

// Declarative description of a network. Edge order per parent fixes the
// child order; an Implies gate takes (antecedent, consequent).
struct GraphSpec {
  std::vector<NodeSpec> nodes;
  std::vector<LnnEdge> edges;
  std::vector<NodeId> actions;
};

struct InferenceConfig {
  double epsilon = 1e-6;
  int max_iterations = 20;
};

struct InferenceReport {
  int iterations = 0;
  bool converged = false;
  double total_contradiction = 0.0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  double lambda = 0.1;
  double weight_max = 10.0;
  double beta_max = 10.0;
};

// Loss and its gradient with respect to the trainable parameters: betas of
// non-asserted weighted gates and the weights of edges leaving them. Entries
// for frozen parameters are zero.
struct TrainGradient {
  double loss = 0.0;
  double score = 0.0;
  std::vector<double> beta;    // indexed like Graph::nodes()
  std::vector<double> weight;  // indexed like Graph::edges()
};

// Minimum weight an input needs before the downward pass divides by it.
inline constexpr double kMinInverseWeight = 1e-6;

class Graph {
 public:
  // Validates the spec and orders nodes so every child precedes its parents.
  // Throws LnnError on duplicate ids, unknown references, arity violations,
  // negative weights or betas, out-of-range bounds, and cycles.
  static Graph build(const GraphSpec& spec);

  // Nodes in topological order (children first).
  std::span<const LnnNode> nodes() const { return nodes_; }
  std::span<const LnnEdge> edges() const { return edges_; }
  // Edge indices into edges(), in child order.
  std::span<const std::size_t> child_edges(std::size_t node) const { return children_[node]; }
  std::size_t child_node(std::size_t edge) const { return edge_child_[edge]; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws on unknown id
  const LnnNode& node(std::string_view id) const { return nodes_[index_of(id)]; }
  const LnnNode& node(std::size_t index) const { return nodes_[index]; }
  TruthBounds bounds(std::string_view id) const { return node(id).bounds; }

  const std::vector<std::size_t>& actions() const { return actions_; }
  // Proposition label -> node index, for every proposition that is not an action.
  const std::map<std::string, std::size_t, std::less<>>& fact_index() const { return fact_index_; }
  bool is_action(std::size_t index) const;

  // Fixes a proposition's bounds and marks it asserted.
  void set_fact(std::string_view id, TruthBounds bounds);

  double upward_pass();
  double downward_pass();

  using SweepObserver = std::function<void(const Graph&, int sweep)>;
  InferenceReport infer(const InferenceConfig& config = {}, const SweepObserver& observer = {});

  double contradiction_loss() const;

  // Bandit-style update toward reward > 0 ? 1 : 0 on the chosen action's
  // single-upward-pass lower bound, plus lambda times contradiction.
  // Returns the loss before the update.
  double train_step(std::string_view action, double reward, const TrainConfig& config = {});
  TrainGradient train_gradient(std::string_view action, double reward, double lambda) const;
  double train_loss(std::string_view action, double reward, double lambda) const;

  // All non-asserted bounds back to [0,1]; parameters untouched.
  void reset_bounds();
  // Retracts every fact: fact propositions become unasserted and unknown.
  void clear_facts();

  void set_beta(std::size_t node, double beta);
  void set_weight(std::size_t edge, double weight);
  bool beta_trainable(std::size_t node) const;
  bool weight_trainable(std::size_t edge) const;

  GraphSpec to_spec() const;

 private:
  struct Forward;
  Forward forward(std::size_t action, double reward, double lambda) const;
  std::size_t action_index_of(std::string_view action) const;

  std::vector<LnnNode> nodes_;
  std::vector<LnnEdge> edges_;
  std::vector<std::size_t> edge_child_;
  std::vector<std::vector<std::size_t>> children_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, std::size_t, std::less<>> fact_index_;
  std::vector<std::size_t> actions_;
};

inline Graph build_graph(const GraphSpec& spec) { return Graph::build(spec); }

}  // namespace loa
