#include "loa/rulebook.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>

namespace loa {

namespace {

const std::vector<std::string> kDirections = {"north", "east", "south", "west"};

struct Predicate {
  std::string_view name;
  bool unary;
  bool action;
};

constexpr Predicate kPredicates[] = {
    {"found", true, false},   {"visited", true, false}, {"coin_here", false, false},
    {"go", true, true},       {"take_coin", false, true},
};

struct Literal {
  const Predicate* predicate = nullptr;
  bool negated = false;

  std::string ground(const std::string& constant) const {
    std::string atom(predicate->name);
    if (predicate->unary) atom += "(" + constant + ")";
    return atom;
  }
};

Literal parse_literal(std::string_view text) {
  Literal lit;
  auto trim = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(text);
  if (!s.empty() && s.front() == '!') {
    lit.negated = true;
    s = trim(s.substr(1));
  }
  std::string_view name = s;
  std::optional<std::string_view> arg;
  if (auto open = s.find('('); open != std::string_view::npos) {
    if (s.back() != ')') throw RulebookError("malformed literal '" + std::string(text) + "'");
    name = trim(s.substr(0, open));
    arg = trim(s.substr(open + 1, s.size() - open - 2));
  }
  for (const Predicate& p : kPredicates)
    if (p.name == name) lit.predicate = &p;
  if (lit.predicate == nullptr) throw RulebookError("unknown predicate '" + std::string(name) + "'");
  if (lit.predicate->unary && !arg)
    throw RulebookError("predicate '" + std::string(name) + "' takes the variable D");
  if (!lit.predicate->unary && arg)
    throw RulebookError("predicate '" + std::string(name) + "' takes no arguments");
  if (arg && *arg != "D")
    throw RulebookError("literal '" + std::string(text) + "' must use the variable D");
  return lit;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

class SpecBuilder {
 public:
  bool has(const std::string& id) const { return index_.contains(id); }

  void node(const std::string& id, NodeKind kind, bool asserted = false) {
    if (has(id)) return;
    index_.emplace(id, spec_.nodes.size());
    NodeSpec ns;
    ns.id = id;
    ns.kind = kind;
    ns.asserted = asserted;
    spec_.nodes.push_back(std::move(ns));
  }

  void edge(const std::string& parent, const std::string& child, double weight) {
    spec_.edges.push_back({parent, child, weight});
  }

  GraphSpec finish() {
    for (const std::string& id : action_node_order())
      if (has(id)) spec_.actions.push_back(id);
    return std::move(spec_);
  }

 private:
  GraphSpec spec_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace

const std::vector<std::string>& action_node_order() {
  static const std::vector<std::string> order = {"go(north)", "go(east)", "go(south)", "go(west)", "take_coin"};
  return order;
}

GraphSpec compile_spec(const Rulebook& rulebook) {
  SpecBuilder builder;
  for (const RuleTemplate& tmpl : rulebook.templates) {
    const Literal head = parse_literal(tmpl.head);
    if (!head.predicate->action || head.negated)
      throw RulebookError("rule head '" + tmpl.head + "' is not an action");
    if (tmpl.body.empty()) throw RulebookError("rule for '" + tmpl.head + "' has an empty body");
    if (!(tmpl.initial_weight >= 0.0)) throw RulebookError("rule weight must be nonnegative");
    std::vector<Literal> body;
    for (const std::string& text : tmpl.body) {
      body.push_back(parse_literal(text));
      if (body.back().predicate->action)
        throw RulebookError("body literal '" + text + "' refers to an action");
      if (body.back().predicate->unary != head.predicate->unary)
        throw RulebookError("template '" + tmpl.head + "' must share exactly one variable D between head and body");
    }

    const std::vector<std::string> constants =
        head.predicate->unary ? kDirections : std::vector<std::string>{""};
    for (const std::string& d : constants) {
      std::vector<std::string> body_ids;
      for (const Literal& lit : body) {
        const std::string atom = lit.ground(d);
        builder.node(atom, NodeKind::Proposition);
        if (lit.negated) {
          const std::string neg = "¬" + atom;
          if (!builder.has(neg)) {
            builder.node(neg, NodeKind::Not);
            builder.edge(neg, atom, 1.0);
          }
          body_ids.push_back(neg);
        } else {
          body_ids.push_back(atom);
        }
      }

      std::string antecedent = body_ids.front();
      if (body_ids.size() > 1) {
        antecedent = join(body_ids, "∧");
        if (!builder.has(antecedent)) {
          builder.node(antecedent, NodeKind::And);
          for (const std::string& id : body_ids) builder.edge(antecedent, id, tmpl.initial_weight);
        }
      }

      const std::string action = head.ground(d);
      builder.node(action, NodeKind::Proposition);
      std::string consequent = action;
      std::string rule_id;
      if (tmpl.kind == RuleKind::Rule) {
        rule_id = "rule:" + action + "←" + antecedent;
      } else {
        consequent = "¬" + action;
        if (!builder.has(consequent)) {
          builder.node(consequent, NodeKind::Not);
          builder.edge(consequent, action, 1.0);
        }
        rule_id = "constraint:" + consequent + "←" + antecedent;
      }
      if (builder.has(rule_id)) continue;
      builder.node(rule_id, NodeKind::Implies, true);
      builder.edge(rule_id, antecedent, tmpl.initial_weight);
      builder.edge(rule_id, consequent, tmpl.initial_weight);
    }
  }
  return builder.finish();
}

Graph compile(const Rulebook& rulebook) { return Graph::build(compile_spec(rulebook)); }

const std::vector<std::string>& builtin_rulebook_names() {
  static const std::vector<std::string> names = {"simple_nav", "avoid_revisit", "constraint_revisit"};
  return names;
}

Rulebook builtin_rulebook(std::string_view name) {
  const RuleTemplate take_coin{"take_coin", {"coin_here"}, RuleKind::Rule, 1.0};
  if (name == "simple_nav")
    return {"simple_nav", {{"go(D)", {"found(D)"}, RuleKind::Rule, 1.0}, take_coin}};
  if (name == "avoid_revisit")
    return {"avoid_revisit", {{"go(D)", {"found(D)", "!visited(D)"}, RuleKind::Rule, 1.0}, take_coin}};
  if (name == "constraint_revisit")
    return {"constraint_revisit",
            {{"go(D)", {"found(D)"}, RuleKind::Rule, 1.0},
             {"go(D)", {"visited(D)"}, RuleKind::Constraint, 1.0},
             take_coin}};
  throw RulebookError("unknown rulebook '" + std::string(name) + "'");
}

Rulebook rulebook_from_json(const nlohmann::json& doc) {
  try {
    Rulebook book;
    book.name = doc.at("name").get<std::string>();
    for (const auto& t : doc.at("templates")) {
      RuleTemplate tmpl;
      tmpl.head = t.at("head").get<std::string>();
      tmpl.body = t.at("body").get<std::vector<std::string>>();
      const std::string kind = t.value("kind", std::string("rule"));
      if (kind == "rule")
        tmpl.kind = RuleKind::Rule;
      else if (kind == "constraint")
        tmpl.kind = RuleKind::Constraint;
      else
        throw RulebookError("unknown template kind '" + kind + "'");
      tmpl.initial_weight = t.value("weight", 1.0);
      book.templates.push_back(std::move(tmpl));
    }
    return book;
  } catch (const nlohmann::json::exception& e) {
    throw RulebookError(std::string("malformed rulebook: ") + e.what());
  }
}

nlohmann::json to_json(const Rulebook& rulebook) {
  nlohmann::json templates = nlohmann::json::array();
  for (const RuleTemplate& t : rulebook.templates) {
    templates.push_back({{"head", t.head},
                         {"body", t.body},
                         {"kind", t.kind == RuleKind::Rule ? "rule" : "constraint"},
                         {"weight", t.initial_weight}});
  }
  return {{"name", rulebook.name}, {"templates", std::move(templates)}};
}

Rulebook load_rulebook_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RulebookError("cannot open rulebook file '" + path.string() + "'");
  try {
    return rulebook_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw RulebookError("rulebook file '" + path.string() + "': " + e.what());
  }
}

Rulebook resolve_rulebook(std::string_view name_or_path) {
  const auto& names = builtin_rulebook_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_rulebook(name_or_path);
  const std::filesystem::path path(name_or_path);
  if (path.extension() == ".json" || std::filesystem::exists(path)) return load_rulebook_file(path);
  throw RulebookError("unknown rulebook '" + std::string(name_or_path) + "'");
}

}  // namespace loa
