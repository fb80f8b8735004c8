#pragma once

// Wire form of a network: the JSON snapshot served to clients and the
// GraphViz rendering used for offline inspection.

#include <string>

#include <json.hpp>

#include "loa/lnn.hpp"

namespace loa {

nlohmann::json export_snapshot(const Graph& graph);

// Rebuilds a graph, bounds included, from export_snapshot output.
Graph graph_from_snapshot(const nlohmann::json& snapshot);

// Nodes with truth "true" are filled red, the rest white. Propositions are
// rounded boxes, actions rectangles, and gates circles labelled with their
// connective.
std::string export_dot(const Graph& graph);

}  // namespace loa
