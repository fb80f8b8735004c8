#pragma once

// Rule templates over the direction variable D, grounded into a network.
//
// A rule  go(D) <- found(D), !visited(D)  becomes, for every direction d, an
// asserted implication from the conjunction of its body literals to the
// action proposition go(d). A constraint with the same shape asserts the
// implication to the negated head instead.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "loa/lnn.hpp"

namespace loa {

class RulebookError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RuleKind { Rule, Constraint };

struct RuleTemplate {
  std::string head;               // e.g. "go(D)" or "take_coin"
  std::vector<std::string> body;  // e.g. {"found(D)", "!visited(D)"}
  RuleKind kind = RuleKind::Rule;
  double initial_weight = 1.0;
};

struct Rulebook {
  std::string name;
  std::vector<RuleTemplate> templates;
};

// Action node ids in their fixed order.
const std::vector<std::string>& action_node_order();

Graph compile(const Rulebook& rulebook);
GraphSpec compile_spec(const Rulebook& rulebook);

const std::vector<std::string>& builtin_rulebook_names();
Rulebook builtin_rulebook(std::string_view name);

Rulebook rulebook_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Rulebook& rulebook);
Rulebook load_rulebook_file(const std::filesystem::path& path);

// A builtin name, or otherwise a path to a rulebook JSON file.
Rulebook resolve_rulebook(std::string_view name_or_path);

}  // namespace loa
