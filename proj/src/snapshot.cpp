#include "loa/snapshot.hpp"

#include <sstream>

namespace loa {

using nlohmann::json;

json export_snapshot(const Graph& graph) {
  json nodes = json::array();
  for (const LnnNode& node : graph.nodes()) {
    nodes.push_back({
        {"id", node.id},
        {"kind", to_string(node.kind)},
        {"label", node.label},
        {"lower", node.bounds.lower},
        {"upper", node.bounds.upper},
        {"beta", node.beta},
        {"asserted", node.asserted},
        {"truth", to_string(classify(node.bounds))},
    });
  }
  json edges = json::array();
  for (const LnnEdge& edge : graph.edges())
    edges.push_back({{"parent", edge.parent}, {"child", edge.child}, {"weight", edge.weight}});
  json actions = json::array();
  for (std::size_t a : graph.actions()) actions.push_back(graph.node(a).id);
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"actions", std::move(actions)}};
}

Graph graph_from_snapshot(const json& snapshot) {
  try {
    GraphSpec spec;
    for (const json& n : snapshot.at("nodes")) {
      NodeSpec ns;
      ns.id = n.at("id").get<std::string>();
      ns.kind = node_kind_from_string(n.at("kind").get<std::string>());
      ns.label = n.value("label", ns.id);
      ns.beta = n.value("beta", 1.0);
      ns.asserted = n.value("asserted", false);
      if (n.contains("lower") || n.contains("upper"))
        ns.bounds = TruthBounds{n.value("lower", 0.0), n.value("upper", 1.0)};
      spec.nodes.push_back(std::move(ns));
    }
    for (const json& e : snapshot.at("edges"))
      spec.edges.push_back({e.at("parent").get<std::string>(), e.at("child").get<std::string>(),
                            e.value("weight", 1.0)});
    for (const json& a : snapshot.value("actions", json::array())) spec.actions.push_back(a.get<std::string>());
    return Graph::build(spec);
  } catch (const json::exception& e) {
    throw LnnError(std::string("malformed snapshot: ") + e.what());
  }
}

namespace {

std::string quoted(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string_view connective(NodeKind kind) {
  switch (kind) {
    case NodeKind::And: return "∧";
    case NodeKind::Or: return "∨";
    case NodeKind::Not: return "¬";
    case NodeKind::Implies: return "→";
    case NodeKind::Proposition: break;
  }
  return "";
}

}  // namespace

std::string export_dot(const Graph& graph) {
  std::ostringstream out;
  out << "digraph lnn {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    const LnnNode& node = graph.node(i);
    const Truth truth = classify(node.bounds);
    std::string shape, label = node.label;
    if (graph.is_action(i)) {
      shape = "box";
    } else if (node.kind == NodeKind::Proposition) {
      shape = "box, style=\"rounded,filled\"";
    } else {
      shape = "circle";
      label = std::string(connective(node.kind));
    }
    if (shape.find("filled") == std::string::npos) shape += ", style=filled";
    out << "  " << quoted(node.id) << " [label=" << quoted(label) << ", shape=" << shape
        << ", fillcolor=" << (truth == Truth::True ? "red" : "white")
        << ", tooltip=" << quoted("[" + std::to_string(node.bounds.lower) + ", " + std::to_string(node.bounds.upper) + "]")
        << "];\n";
  }
  // Evidence flows left to right; an implication points on to its consequent.
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    const auto kids = graph.child_edges(i);
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const LnnEdge& edge = graph.edges()[kids[k]];
      const bool consequent = graph.node(i).kind == NodeKind::Implies && k == 1;
      const std::string& from = consequent ? edge.parent : edge.child;
      const std::string& to = consequent ? edge.child : edge.parent;
      out << "  " << quoted(from) << " -> " << quoted(to) << " [label=" << quoted(std::to_string(edge.weight))
          << "];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace loa
