#include "loa/game.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <queue>
#include <sstream>

#include "loa/rng.hpp"

namespace loa {

Direction opposite(Direction d) {
  switch (d) {
    case Direction::North: return Direction::South;
    case Direction::East: return Direction::West;
    case Direction::South: return Direction::North;
    case Direction::West: return Direction::East;
  }
  return d;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::North: return "north";
    case Direction::East: return "east";
    case Direction::South: return "south";
    case Direction::West: return "west";
  }
  return "north";
}

std::optional<Direction> direction_from_string(std::string_view text) {
  for (Direction d : kDirections)
    if (to_string(d) == text) return d;
  return std::nullopt;
}

Coord step_towards(Coord from, Direction d) {
  switch (d) {
    case Direction::North: return {from.x, from.y + 1};
    case Direction::East: return {from.x + 1, from.y};
    case Direction::South: return {from.x, from.y - 1};
    case Direction::West: return {from.x - 1, from.y};
  }
  return from;
}

std::optional<std::string> Layout::neighbor(const std::string& room, Direction d) const {
  auto it = connections.find({room, d});
  if (it == connections.end()) return std::nullopt;
  return it->second;
}

bool Layout::has_room(const std::string& room) const {
  return std::find(rooms.begin(), rooms.end(), room) != rooms.end();
}

void Layout::connect(const std::string& from, Direction d, const std::string& to) {
  auto set_one = [this](const std::string& a, Direction dir, const std::string& b) {
    auto [it, inserted] = connections.emplace(std::make_pair(a, dir), b);
    if (!inserted && it->second != b) {
      throw GameError("conflicting connection from " + a + " going " + std::string(to_string(dir)) + ": " +
                      it->second + " vs " + b);
    }
  };
  set_one(from, d, to);
  set_one(to, opposite(d), from);
}

void Layout::validate() const {
  std::set<std::string> names;
  for (const std::string& r : rooms) {
    if (r.empty()) throw GameError("room with empty name");
    if (!names.insert(r).second) throw GameError("duplicate room '" + r + "'");
  }
  if (!names.contains(start)) throw GameError("start room '" + start + "' does not exist");
  if (!names.contains(coin_room)) throw GameError("coin room '" + coin_room + "' does not exist");
  for (const auto& [key, to] : connections) {
    if (!names.contains(key.first) || !names.contains(to))
      throw GameError("connection references unknown room " + key.first + " -> " + to);
    auto back = neighbor(to, opposite(key.second));
    if (!back || *back != key.first)
      throw GameError("connection " + key.first + " -> " + to + " has no matching return path");
  }
  optimal_steps(*this);
}

namespace {

std::string room_name(std::size_t index) {
  std::string name;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    name.insert(name.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return name;
}

int order_of(Direction d) { return static_cast<int>(d); }

}  // namespace

Layout generate_layout(int chain_length, int branches, std::uint64_t seed) {
  if (chain_length < 1) throw GameError("chain_length must be at least 1");
  if (branches < 0) throw GameError("branches must be nonnegative");

  Lcg rng(seed);
  Layout layout;
  std::map<Coord, std::string> occupied;
  std::vector<Coord> path;
  std::vector<Direction> forward;

  auto add_room = [&](Coord at) {
    std::string name = room_name(layout.rooms.size());
    layout.rooms.push_back(name);
    occupied.emplace(at, name);
    return name;
  };

  path.push_back({0, 0});
  layout.start = add_room(path.back());
  // The path never heads west, so its x coordinate is nondecreasing and the
  // eastern cell is always free: the walk cannot trap itself.
  for (int i = 1; i <= chain_length; ++i) {
    std::vector<Direction> free;
    for (Direction d : {Direction::North, Direction::East, Direction::South})
      if (!occupied.contains(step_towards(path.back(), d))) free.push_back(d);
    const Direction d = free[rng.pick(free.size())];
    const Coord next = step_towards(path.back(), d);
    const std::string from = occupied.at(path.back());
    const std::string to = add_room(next);
    layout.connect(from, d, to);
    forward.push_back(d);
    path.push_back(next);
  }
  layout.coin_room = occupied.at(path.back());

  // Dead ends hang off distinct non-coin path rooms, on a free cell whose
  // direction comes after the onward exit in north, east, south, west order.
  std::set<std::size_t> used;
  for (int b = 0; b < branches; ++b) {
    std::vector<std::pair<std::size_t, std::vector<Direction>>> candidates;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (used.contains(i)) continue;
      std::vector<Direction> slots;
      for (Direction d : kDirections) {
        if (order_of(d) <= order_of(forward[i])) continue;
        if (!occupied.contains(step_towards(path[i], d))) slots.push_back(d);
      }
      if (!slots.empty()) candidates.emplace_back(i, std::move(slots));
    }
    if (candidates.empty()) {
      throw GameError("cannot attach " + std::to_string(branches) + " branches: only " + std::to_string(b) +
                      " attachment slots available");
    }
    const auto& [room_index, slots] = candidates[rng.pick(candidates.size())];
    const Direction d = slots[rng.pick(slots.size())];
    const std::string from = occupied.at(path[room_index]);
    const std::string to = add_room(step_towards(path[room_index], d));
    layout.connect(from, d, to);
    used.insert(room_index);
  }
  return layout;
}

Layout fixture_fix_a() {
  Layout layout;
  layout.rooms = {"A", "B", "C"};
  layout.connect("A", Direction::North, "B");
  layout.connect("B", Direction::East, "C");
  layout.start = "A";
  layout.coin_room = "C";
  return layout;
}

Layout layout_from_json(const nlohmann::json& doc) {
  try {
    Layout layout;
    layout.rooms = doc.at("rooms").get<std::vector<std::string>>();
    for (const auto& c : doc.value("connections", nlohmann::json::array())) {
      const std::string dir = c.at("dir").get<std::string>();
      auto d = direction_from_string(dir);
      if (!d) throw GameError("unknown direction '" + dir + "'");
      layout.connect(c.at("from").get<std::string>(), *d, c.at("to").get<std::string>());
    }
    layout.start = doc.at("start").get<std::string>();
    layout.coin_room = doc.at("coin").get<std::string>();
    layout.validate();
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw GameError(std::string("malformed layout: ") + e.what());
  }
}

nlohmann::json to_json(const Layout& layout) {
  nlohmann::json connections = nlohmann::json::array();
  for (const std::string& room : layout.rooms)
    for (Direction d : kDirections)
      if (auto to = layout.neighbor(room, d)) connections.push_back({{"from", room}, {"dir", to_string(d)}, {"to", *to}});
  return {{"rooms", layout.rooms}, {"connections", std::move(connections)}, {"start", layout.start},
          {"coin", layout.coin_room}};
}

Layout load_layout_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GameError("cannot open layout file '" + path.string() + "'");
  try {
    return layout_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw GameError("layout file '" + path.string() + "': " + e.what());
  }
}

int optimal_steps(const Layout& layout) {
  std::map<std::string, int> dist{{layout.start, 0}};
  std::queue<std::string> frontier;
  frontier.push(layout.start);
  while (!frontier.empty()) {
    const std::string room = frontier.front();
    frontier.pop();
    if (room == layout.coin_room) return dist.at(room) + 1;
    for (Direction d : kDirections) {
      auto next = layout.neighbor(room, d);
      if (next && !dist.contains(*next)) {
        dist.emplace(*next, dist.at(room) + 1);
        frontier.push(*next);
      }
    }
  }
  throw GameError("coin room '" + layout.coin_room + "' is unreachable from '" + layout.start + "'");
}

std::string Command::label() const {
  switch (kind) {
    case Kind::Go: return "go " + std::string(to_string(direction));
    case Kind::TakeCoin: return "take coin";
    case Kind::Invalid: return text;
  }
  return text;
}

Command parse_command(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    words.push_back(std::move(w));
  }
  if (words.size() == 2 && words[0] == "go") {
    if (auto d = direction_from_string(words[1])) return Command::go(*d);
  }
  if (words.size() == 2 && words[0] == "take" && words[1] == "coin") return Command::take_coin();
  return Command::invalid(std::string(text));
}

std::pair<GameState, Observation> new_game(Layout layout, int max_steps) {
  if (max_steps < 1) throw GameError("max_steps must be positive");
  layout.validate();
  GameState state;
  state.layout = std::make_shared<const Layout>(std::move(layout));
  state.location = state.layout->start;
  state.visited = {state.location};
  state.max_steps = max_steps;
  Observation obs{render_observation(state), 0.0, false, 0};
  return {std::move(state), std::move(obs)};
}

std::pair<GameState, Observation> step(const GameState& state, const Command& command) {
  if (state.done) throw GameError("the game is already finished");
  GameState next = state;
  Observation obs;
  ++next.steps;
  switch (command.kind) {
    case Command::Kind::Go:
      if (auto to = next.layout->neighbor(next.location, command.direction)) {
        next.location = *to;
        next.visited.insert(*to);
        obs.text = render_observation(next);
      } else {
        obs.text = kBlockedText;
      }
      break;
    case Command::Kind::TakeCoin:
      if (next.coin_here()) {
        next.coin_taken = true;
        next.score = 1;
        next.done = true;
        obs.reward = 1.0;
        obs.text = kWinText;
      } else {
        obs.text = kNoCoinText;
      }
      break;
    case Command::Kind::Invalid: obs.text = kInvalidText; break;
  }
  if (next.steps >= next.max_steps) next.done = true;
  obs.done = next.done;
  obs.score = next.score;
  return {std::move(next), std::move(obs)};
}

std::string render_observation(const GameState& state) {
  std::vector<std::string_view> exits;
  for (Direction d : kDirections)
    if (state.layout->neighbor(state.location, d)) exits.push_back(to_string(d));

  std::string text = "= Room " + state.location + " =\nYou are in room " + state.location + ".";
  if (exits.empty()) {
    text += " There are no exits.";
  } else if (exits.size() == 1) {
    text += " There is an exit to the " + std::string(exits[0]) + ".";
  } else if (exits.size() == 2) {
    text += " There are exits to the " + std::string(exits[0]) + " and " + std::string(exits[1]) + ".";
  } else {
    text += " There are exits to the ";
    for (std::size_t i = 0; i + 1 < exits.size(); ++i) text += std::string(exits[i]) + ", ";
    text += "and " + std::string(exits.back()) + ".";
  }
  if (state.coin_here()) text += " There is a coin here.";
  return text;
}

}  // namespace loa
