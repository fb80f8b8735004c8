#pragma once

// Pattern-based reading of game observations into logical facts, plus the
// cross-step spatial memory that turns exits into visited(direction) facts.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "loa/game.hpp"

namespace loa {

enum class Predicate { Found, Visited, CoinHere };

struct Fact {
  Predicate predicate = Predicate::Found;
  std::optional<Direction> arg;

  static Fact found(Direction d) { return {Predicate::Found, d}; }
  static Fact visited(Direction d) { return {Predicate::Visited, d}; }
  static Fact coin_here() { return {Predicate::CoinHere, std::nullopt}; }

  // "found(north)", "visited(south)", "coin_here" — also the proposition id.
  std::string label() const;

  auto operator<=>(const Fact&) const = default;
};

using FactSet = std::set<Fact>;

// Parses a fact label; throws std::invalid_argument on anything else.
Fact parse_fact(std::string_view label);
std::vector<std::string> fact_labels(const FactSet& facts);
bool has_fact(const FactSet& facts, const Fact& fact);

// Total: unrecognised sentences are ignored.
FactSet parse_observation(std::string_view text);

// Room name from a "= Room X =" header line, if present.
std::optional<std::string> parse_room_header(std::string_view text);

struct Tracker {
  std::string current_room;
  Coord position;
  std::map<std::string, Coord> room_positions;
  std::set<std::string> visited_rooms;
  std::map<Coord, std::string> occupants;

  // Tracker anchored at (0,0) on the room named in the first observation.
  static Tracker start(std::string_view observation_text);
};

Tracker update_tracker(Tracker tracker, const Command& executed, std::string_view observation_text);

// Adds visited(d) for each found(d) whose neighbouring cell holds a room
// already entered.
FactSet tracker_facts(const Tracker& tracker, const FactSet& found);

}  // namespace loa
