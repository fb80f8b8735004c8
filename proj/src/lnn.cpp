#include "loa/lnn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <utility>

namespace loa {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

bool weighted(NodeKind kind) {
  return kind == NodeKind::And || kind == NodeKind::Or || kind == NodeKind::Implies;
}

// One input of a weighted gate after rewriting negative dependence: the
// antecedent of an implication enters as (1 - a).
struct Input {
  std::size_t edge;
  std::size_t child;
  bool negated;
};

// Effective interval of an input (swapped and complemented when negated).
TruthBounds effective(TruthBounds child, bool negated) {
  if (!negated) return child;
  return {1.0 - child.upper, 1.0 - child.lower};
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Proposition: return "proposition";
    case NodeKind::And: return "and";
    case NodeKind::Or: return "or";
    case NodeKind::Not: return "not";
    case NodeKind::Implies: return "implies";
  }
  return "proposition";
}

NodeKind node_kind_from_string(std::string_view text) {
  if (text == "proposition") return NodeKind::Proposition;
  if (text == "and") return NodeKind::And;
  if (text == "or") return NodeKind::Or;
  if (text == "not") return NodeKind::Not;
  if (text == "implies") return NodeKind::Implies;
  throw LnnError("unknown node kind '" + std::string(text) + "'");
}

std::string_view to_string(Truth truth) {
  switch (truth) {
    case Truth::True: return "true";
    case Truth::False: return "false";
    case Truth::Unknown: return "unknown";
    case Truth::Contradiction: return "contradiction";
  }
  return "unknown";
}

Truth classify(TruthBounds b) {
  if (b.lower > b.upper) return Truth::Contradiction;
  if (b.lower >= 0.5 && b.upper >= 0.5) return Truth::True;
  if (b.upper <= 0.5 && b.lower <= 0.5) return Truth::False;
  return Truth::Unknown;
}

Graph Graph::build(const GraphSpec& spec) {
  const std::size_t n = spec.nodes.size();
  std::map<std::string, std::size_t, std::less<>> decl;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeSpec& ns = spec.nodes[i];
    if (ns.id.empty()) throw LnnError("node with empty id");
    if (!decl.emplace(ns.id, i).second) throw LnnError("duplicate node id '" + ns.id + "'");
    if (!(ns.beta >= 0.0) || !std::isfinite(ns.beta))
      throw LnnError("negative or non-finite beta on '" + ns.id + "'");
    if (ns.bounds && (!in_unit(ns.bounds->lower) || !in_unit(ns.bounds->upper)))
      throw LnnError("bounds outside [0,1] on '" + ns.id + "'");
  }

  std::vector<std::vector<std::size_t>> decl_children(n);
  std::vector<std::vector<std::size_t>> decl_parents(n);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::size_t, std::size_t>> edge_ends;
  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    const LnnEdge& edge = spec.edges[e];
    auto p = decl.find(edge.parent);
    auto c = decl.find(edge.child);
    if (p == decl.end()) throw LnnError("edge references unknown node '" + edge.parent + "'");
    if (c == decl.end()) throw LnnError("edge references unknown node '" + edge.child + "'");
    if (!(edge.weight >= 0.0) || !std::isfinite(edge.weight))
      throw LnnError("negative or non-finite weight on edge " + edge.parent + " -> " + edge.child);
    if (!seen.emplace(p->second, c->second).second)
      throw LnnError("duplicate edge " + edge.parent + " -> " + edge.child);
    decl_children[p->second].push_back(e);
    decl_parents[c->second].push_back(p->second);
    edge_ends.emplace_back(p->second, c->second);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const NodeSpec& ns = spec.nodes[i];
    const std::size_t arity = decl_children[i].size();
    bool ok = true;
    switch (ns.kind) {
      case NodeKind::Proposition: ok = arity == 0; break;
      case NodeKind::Not: ok = arity == 1; break;
      case NodeKind::Implies: ok = arity == 2; break;
      case NodeKind::And:
      case NodeKind::Or: ok = arity >= 1; break;
    }
    if (!ok) {
      throw LnnError("arity violation: " + std::string(to_string(ns.kind)) + " node '" + ns.id +
                     "' has " + std::to_string(arity) + " children");
    }
  }

  // Kahn's algorithm, children first, ties broken by declaration order.
  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = decl_children[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t p : decl_parents[i])
      if (--pending[p] == 0) ready.push(p);
  }
  if (order.size() != n) throw LnnError("cycle detected in graph");

  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;

  Graph g;
  g.nodes_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const NodeSpec& ns = spec.nodes[order[k]];
    LnnNode node;
    node.id = ns.id;
    node.kind = ns.kind;
    node.label = ns.label.empty() ? ns.id : ns.label;
    node.beta = ns.beta;
    node.asserted = ns.asserted;
    node.bounds = ns.bounds.value_or(ns.asserted ? TruthBounds::truth() : TruthBounds::unknown());
    g.index_.emplace(node.id, k);
    g.nodes_.push_back(std::move(node));
  }
  g.edges_ = spec.edges;
  g.edge_child_.resize(spec.edges.size());
  g.children_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e : decl_children[i]) {
      g.children_[position[i]].push_back(e);
      g.edge_child_[e] = position[edge_ends[e].second];
    }
  }

  std::set<std::size_t> action_set;
  for (const NodeId& id : spec.actions) {
    auto it = g.index_.find(id);
    if (it == g.index_.end()) throw LnnError("action references unknown node '" + id + "'");
    if (!action_set.insert(it->second).second) throw LnnError("duplicate action '" + id + "'");
    g.actions_.push_back(it->second);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (g.nodes_[k].kind == NodeKind::Proposition && !action_set.contains(k))
      g.fact_index_.emplace(g.nodes_[k].label, k);
  }
  return g;
}

std::optional<std::size_t> Graph::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Graph::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LnnError("unknown node '" + std::string(id) + "'");
  return it->second;
}

bool Graph::is_action(std::size_t index) const {
  return std::find(actions_.begin(), actions_.end(), index) != actions_.end();
}

void Graph::set_fact(std::string_view id, TruthBounds bounds) {
  const std::size_t i = index_of(id);
  LnnNode& node = nodes_[i];
  if (node.kind != NodeKind::Proposition)
    throw LnnError("set_fact target '" + node.id + "' is not a proposition");
  if (!in_unit(bounds.lower) || !in_unit(bounds.upper))
    throw LnnError("fact bounds outside [0,1] for '" + node.id + "'");
  node.bounds = bounds;
  node.asserted = true;
}

namespace {

// Upward interval of a gate from its children's current intervals.
TruthBounds activate(const LnnNode& gate, std::span<const std::size_t> child_edges,
                     std::span<const LnnEdge> edges, std::span<const std::size_t> edge_child,
                     std::span<const LnnNode> nodes) {
  auto child = [&](std::size_t k) { return nodes[edge_child[child_edges[k]]].bounds; };
  switch (gate.kind) {
    case NodeKind::Not: {
      TruthBounds x = child(0);
      return {1.0 - x.upper, 1.0 - x.lower};
    }
    case NodeKind::And: {
      double lo = gate.beta, hi = gate.beta;
      for (std::size_t k = 0; k < child_edges.size(); ++k) {
        const double w = edges[child_edges[k]].weight;
        lo -= w * (1.0 - child(k).lower);
        hi -= w * (1.0 - child(k).upper);
      }
      return {clamp01(lo), clamp01(hi)};
    }
    case NodeKind::Or:
    case NodeKind::Implies: {
      double lo = 1.0 - gate.beta, hi = 1.0 - gate.beta;
      for (std::size_t k = 0; k < child_edges.size(); ++k) {
        const double w = edges[child_edges[k]].weight;
        const TruthBounds z = effective(child(k), gate.kind == NodeKind::Implies && k == 0);
        lo += w * z.lower;
        hi += w * z.upper;
      }
      return {clamp01(lo), clamp01(hi)};
    }
    case NodeKind::Proposition: break;
  }
  return gate.bounds;
}

}  // namespace

double Graph::upward_pass() {
  double change = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    LnnNode& node = nodes_[i];
    if (!is_gate(node.kind) || node.asserted) continue;
    const TruthBounds fresh = activate(node, children_[i], edges_, edge_child_, nodes_);
    const TruthBounds old = node.bounds;
    node.bounds.lower = std::max(old.lower, fresh.lower);
    node.bounds.upper = std::min(old.upper, fresh.upper);
    change = std::max({change, node.bounds.lower - old.lower, old.upper - node.bounds.upper});
  }
  return change;
}

double Graph::downward_pass() {
  double change = 0.0;
  auto tighten = [&](std::size_t c, double lower, double upper) {
    LnnNode& child = nodes_[c];
    if (child.asserted) return;
    const TruthBounds old = child.bounds;
    child.bounds.lower = std::max(old.lower, clamp01(lower));
    child.bounds.upper = std::min(old.upper, clamp01(upper));
    change = std::max({change, child.bounds.lower - old.lower, old.upper - child.bounds.upper});
  };

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const LnnNode& gate = nodes_[i];
    if (!is_gate(gate.kind)) continue;
    const TruthBounds y = gate.bounds;
    const auto& kids = children_[i];

    if (gate.kind == NodeKind::Not) {
      tighten(edge_child_[kids[0]], 1.0 - y.upper, 1.0 - y.lower);
      continue;
    }

    std::vector<Input> inputs;
    inputs.reserve(kids.size());
    for (std::size_t k = 0; k < kids.size(); ++k)
      inputs.push_back({kids[k], edge_child_[kids[k]], gate.kind == NodeKind::Implies && k == 0});
    auto z = [&](const Input& in) { return effective(nodes_[in.child].bounds, in.negated); };

    const bool conjunctive = gate.kind == NodeKind::And;
    for (std::size_t i_in = 0; i_in < inputs.size(); ++i_in) {
      const Input& in = inputs[i_in];
      const double w = edges_[in.edge].weight;
      if (w < kMinInverseWeight) continue;

      // Sibling sums with the pessimistic/optimistic ends each inverse needs.
      double rest_upper = 0.0, rest_lower = 0.0;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        if (j == i_in) continue;
        const double wj = edges_[inputs[j].edge].weight;
        const TruthBounds zj = z(inputs[j]);
        if (conjunctive) {
          rest_upper += wj * (1.0 - zj.upper);
          rest_lower += wj * (1.0 - zj.lower);
        } else {
          rest_upper += wj * zj.upper;
          rest_lower += wj * zj.lower;
        }
      }

      double z_lower = 0.0, z_upper = 1.0;
      if (conjunctive) {
        if (y.lower > 0.0) z_lower = 1.0 - (gate.beta - y.lower - rest_upper) / w;
        if (y.upper < 1.0) z_upper = 1.0 - (gate.beta - y.upper - rest_lower) / w;
      } else {
        if (y.lower > 0.0) z_lower = (y.lower - 1.0 + gate.beta - rest_upper) / w;
        if (y.upper < 1.0) z_upper = (y.upper - 1.0 + gate.beta - rest_lower) / w;
      }
      z_lower = clamp01(z_lower);
      z_upper = clamp01(z_upper);
      if (in.negated)
        tighten(in.child, 1.0 - z_upper, 1.0 - z_lower);
      else
        tighten(in.child, z_lower, z_upper);
    }
  }
  return change;
}

InferenceReport Graph::infer(const InferenceConfig& config, const SweepObserver& observer) {
  if (!(config.epsilon > 0.0)) throw LnnError("inference epsilon must be positive");
  if (config.max_iterations < 1) throw LnnError("max_iterations must be at least 1");
  InferenceReport report;
  while (report.iterations < config.max_iterations) {
    const double up = upward_pass();
    const double down = downward_pass();
    ++report.iterations;
    if (observer) observer(*this, report.iterations);
    if (std::max(up, down) < config.epsilon) {
      report.converged = true;
      break;
    }
  }
  report.total_contradiction = contradiction_loss();
  return report;
}

double Graph::contradiction_loss() const {
  double total = 0.0;
  for (const LnnNode& node : nodes_) total += node.bounds.contradiction();
  return total;
}

void Graph::reset_bounds() {
  for (LnnNode& node : nodes_)
    if (!node.asserted) node.bounds = TruthBounds::unknown();
}

void Graph::clear_facts() {
  for (const auto& [label, i] : fact_index_) {
    nodes_[i].asserted = false;
    nodes_[i].bounds = TruthBounds::unknown();
  }
}

bool Graph::beta_trainable(std::size_t node) const {
  return weighted(nodes_[node].kind) && !nodes_[node].asserted;
}

bool Graph::weight_trainable(std::size_t edge) const {
  return beta_trainable(index_of(edges_[edge].parent));
}

void Graph::set_beta(std::size_t node, double beta) {
  if (!(beta >= 0.0)) throw LnnError("beta must be nonnegative");
  nodes_.at(node).beta = beta;
}

void Graph::set_weight(std::size_t edge, double weight) {
  if (!(weight >= 0.0)) throw LnnError("weight must be nonnegative");
  edges_.at(edge).weight = weight;
}

std::size_t Graph::action_index_of(std::string_view action) const {
  const std::size_t i = index_of(action);
  if (!is_action(i)) throw LnnError("'" + std::string(action) + "' is not an action node");
  return i;
}

// Differentiable single upward evaluation. Non-asserted gates are recomputed
// from their children without intersecting against stored bounds; every
// other node contributes its stored interval as a constant.
struct Graph::Forward {
  std::vector<double> lo, hi, pre_lo, pre_hi;
  std::vector<bool> live;
  double score = 0.0;
  double target = 0.0;
  double loss = 0.0;
};

Graph::Forward Graph::forward(std::size_t action, double reward, double lambda) const {
  const std::size_t n = nodes_.size();
  Forward f;
  f.lo.resize(n);
  f.hi.resize(n);
  f.pre_lo.resize(n);
  f.pre_hi.resize(n);
  f.live.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const LnnNode& node = nodes_[i];
    if (!is_gate(node.kind) || node.asserted) {
      f.lo[i] = node.bounds.lower;
      f.hi[i] = node.bounds.upper;
      continue;
    }
    f.live[i] = true;
    const auto& kids = children_[i];
    double lo = 0.0, hi = 0.0;
    if (node.kind == NodeKind::Not) {
      const std::size_t c = edge_child_[kids[0]];
      lo = 1.0 - f.hi[c];
      hi = 1.0 - f.lo[c];
    } else if (node.kind == NodeKind::And) {
      lo = hi = node.beta;
      for (std::size_t e : kids) {
        const std::size_t c = edge_child_[e];
        lo -= edges_[e].weight * (1.0 - f.lo[c]);
        hi -= edges_[e].weight * (1.0 - f.hi[c]);
      }
    } else {
      lo = hi = 1.0 - node.beta;
      for (std::size_t k = 0; k < kids.size(); ++k) {
        const std::size_t c = edge_child_[kids[k]];
        const double w = edges_[kids[k]].weight;
        if (node.kind == NodeKind::Implies && k == 0) {
          lo += w * (1.0 - f.hi[c]);
          hi += w * (1.0 - f.lo[c]);
        } else {
          lo += w * f.lo[c];
          hi += w * f.hi[c];
        }
      }
    }
    f.pre_lo[i] = lo;
    f.pre_hi[i] = hi;
    f.lo[i] = clamp01(lo);
    f.hi[i] = clamp01(hi);
  }
  f.score = f.lo[action];
  f.target = reward > 0.0 ? 1.0 : 0.0;
  double contradiction = 0.0;
  for (std::size_t i = 0; i < n; ++i) contradiction += std::max(0.0, f.lo[i] - f.hi[i]);
  f.loss = (f.score - f.target) * (f.score - f.target) + lambda * contradiction;
  return f;
}

double Graph::train_loss(std::string_view action, double reward, double lambda) const {
  return forward(action_index_of(action), reward, lambda).loss;
}

TrainGradient Graph::train_gradient(std::string_view action, double reward, double lambda) const {
  const std::size_t a = action_index_of(action);
  const std::size_t n = nodes_.size();
  const Forward f = forward(a, reward, lambda);

  std::vector<double> adj_lo(n, 0.0), adj_hi(n, 0.0);
  adj_lo[a] += 2.0 * (f.score - f.target);
  for (std::size_t i = 0; i < n; ++i) {
    if (f.lo[i] > f.hi[i]) {
      adj_lo[i] += lambda;
      adj_hi[i] -= lambda;
    }
  }

  TrainGradient grad;
  grad.loss = f.loss;
  grad.score = f.score;
  grad.beta.assign(n, 0.0);
  grad.weight.assign(edges_.size(), 0.0);

  for (std::size_t i = n; i-- > 0;) {
    if (!f.live[i]) continue;
    const LnnNode& node = nodes_[i];
    // Clamp subgradient: zero strictly outside [0,1].
    const double g_lo = in_unit(f.pre_lo[i]) ? adj_lo[i] : 0.0;
    const double g_hi = in_unit(f.pre_hi[i]) ? adj_hi[i] : 0.0;
    if (g_lo == 0.0 && g_hi == 0.0) continue;
    const auto& kids = children_[i];

    if (node.kind == NodeKind::Not) {
      const std::size_t c = edge_child_[kids[0]];
      adj_hi[c] -= g_lo;
      adj_lo[c] -= g_hi;
      continue;
    }
    if (node.kind == NodeKind::And) {
      grad.beta[i] += g_lo + g_hi;
      for (std::size_t e : kids) {
        const std::size_t c = edge_child_[e];
        const double w = edges_[e].weight;
        grad.weight[e] += -g_lo * (1.0 - f.lo[c]) - g_hi * (1.0 - f.hi[c]);
        adj_lo[c] += g_lo * w;
        adj_hi[c] += g_hi * w;
      }
      continue;
    }
    grad.beta[i] -= g_lo + g_hi;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const std::size_t e = kids[k];
      const std::size_t c = edge_child_[e];
      const double w = edges_[e].weight;
      if (node.kind == NodeKind::Implies && k == 0) {
        grad.weight[e] += g_lo * (1.0 - f.hi[c]) + g_hi * (1.0 - f.lo[c]);
        adj_hi[c] -= g_lo * w;
        adj_lo[c] -= g_hi * w;
      } else {
        grad.weight[e] += g_lo * f.lo[c] + g_hi * f.hi[c];
        adj_lo[c] += g_lo * w;
        adj_hi[c] += g_hi * w;
      }
    }
  }
  return grad;
}

double Graph::train_step(std::string_view action, double reward, const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) throw LnnError("learning_rate must be positive");
  if (!(config.lambda >= 0.0)) throw LnnError("lambda must be nonnegative");
  const TrainGradient grad = train_gradient(action, reward, config.lambda);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!beta_trainable(i)) continue;
    nodes_[i].beta = std::clamp(nodes_[i].beta - config.learning_rate * grad.beta[i], 0.0, config.beta_max);
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (!beta_trainable(index_of(edges_[e].parent))) continue;
    edges_[e].weight =
        std::clamp(edges_[e].weight - config.learning_rate * grad.weight[e], 0.0, config.weight_max);
  }
  return grad.loss;
}

GraphSpec Graph::to_spec() const {
  GraphSpec spec;
  for (const LnnNode& node : nodes_)
    spec.nodes.push_back({node.id, node.kind, node.label, node.beta, node.asserted, node.bounds});
  spec.edges = edges_;
  for (std::size_t a : actions_) spec.actions.push_back(nodes_[a].id);
  return spec;
}

}  // namespace loa
