#include "loa/parser.hpp"

#include <regex>
#include <stdexcept>

namespace loa {

std::string Fact::label() const {
  switch (predicate) {
    case Predicate::Found: return "found(" + std::string(to_string(*arg)) + ")";
    case Predicate::Visited: return "visited(" + std::string(to_string(*arg)) + ")";
    case Predicate::CoinHere: return "coin_here";
  }
  return {};
}

Fact parse_fact(std::string_view label) {
  if (label == "coin_here") return Fact::coin_here();
  auto open = label.find('(');
  if (open != std::string_view::npos && label.back() == ')') {
    const std::string_view name = label.substr(0, open);
    const auto d = direction_from_string(label.substr(open + 1, label.size() - open - 2));
    if (d && name == "found") return Fact::found(*d);
    if (d && name == "visited") return Fact::visited(*d);
  }
  throw std::invalid_argument("unknown fact '" + std::string(label) + "'");
}

std::vector<std::string> fact_labels(const FactSet& facts) {
  std::vector<std::string> labels;
  labels.reserve(facts.size());
  for (const Fact& f : facts) labels.push_back(f.label());
  return labels;
}

bool has_fact(const FactSet& facts, const Fact& fact) { return facts.contains(fact); }

FactSet parse_observation(std::string_view text) {
  static const std::regex single(R"(There is an exit to the (north|east|south|west)\.)");
  static const std::regex several(R"(There are exits to the ([a-z, ]+)\.)");
  static const std::regex direction_word(R"(north|east|south|west)");
  static const std::regex coin(R"(There is a coin here\.)");

  FactSet facts;
  const std::string s(text);
  for (std::sregex_iterator it(s.begin(), s.end(), single), end; it != end; ++it)
    facts.insert(Fact::found(*direction_from_string((*it)[1].str())));
  for (std::sregex_iterator it(s.begin(), s.end(), several), end; it != end; ++it) {
    const std::string list = (*it)[1].str();
    for (std::sregex_iterator w(list.begin(), list.end(), direction_word); w != end; ++w)
      facts.insert(Fact::found(*direction_from_string(w->str())));
  }
  if (std::regex_search(s, coin)) facts.insert(Fact::coin_here());
  return facts;
}

std::optional<std::string> parse_room_header(std::string_view text) {
  static const std::regex header(R"(^= Room (\S+) =)");
  std::smatch m;
  const std::string s(text);
  if (std::regex_search(s, m, header)) return m[1].str();
  return std::nullopt;
}

Tracker Tracker::start(std::string_view observation_text) {
  Tracker t;
  t.current_room = parse_room_header(observation_text).value_or("start");
  t.position = {0, 0};
  t.room_positions.emplace(t.current_room, t.position);
  t.visited_rooms.insert(t.current_room);
  t.occupants.emplace(t.position, t.current_room);
  return t;
}

Tracker update_tracker(Tracker tracker, const Command& executed, std::string_view observation_text) {
  if (executed.kind != Command::Kind::Go) return tracker;
  const auto room = parse_room_header(observation_text);
  if (!room) return tracker;  // blocked move
  tracker.position = step_towards(tracker.position, executed.direction);
  tracker.current_room = *room;
  tracker.room_positions.emplace(*room, tracker.position);
  tracker.visited_rooms.insert(*room);
  tracker.occupants.emplace(tracker.position, *room);
  return tracker;
}

FactSet tracker_facts(const Tracker& tracker, const FactSet& found) {
  FactSet out = found;
  for (const Fact& f : found) {
    if (f.predicate != Predicate::Found) continue;
    auto it = tracker.occupants.find(step_towards(tracker.position, *f.arg));
    if (it != tracker.occupants.end() && tracker.visited_rooms.contains(it->second)) out.insert(Fact::visited(*f.arg));
  }
  return out;
}

}  // namespace loa
