#pragma once

// Coin-Collector style text game: rooms on a grid, exits in the four compass
// directions, a single coin to pick up. Everything is deterministic; the
// state is a value and step() returns a new one.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace loa {

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction { North, East, South, West };

inline constexpr std::array<Direction, 4> kDirections = {Direction::North, Direction::East, Direction::South,
                                                         Direction::West};

Direction opposite(Direction d);
std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view text);

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

// North is +y, east is +x.
Coord step_towards(Coord from, Direction d);

struct Layout {
  std::vector<std::string> rooms;
  std::map<std::pair<std::string, Direction>, std::string> connections;
  std::string start;
  std::string coin_room;

  std::optional<std::string> neighbor(const std::string& room, Direction d) const;
  bool has_room(const std::string& room) const;

  // Adds the connection and its mirror; throws on a conflicting mirror.
  void connect(const std::string& from, Direction d, const std::string& to);

  // Symmetry, existence of start/coin rooms, coin reachable.
  void validate() const;
};

// Main path of chain_length moves from start to the coin room plus
// `branches` one-room dead ends hanging off distinct path rooms.
Layout generate_layout(int chain_length, int branches, std::uint64_t seed);

// Three rooms: A -north-> B -east-> C, coin in C, start in A.
Layout fixture_fix_a();

Layout layout_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Layout& layout);
Layout load_layout_file(const std::filesystem::path& path);

// Shortest command count to win: moves plus the final "take coin".
int optimal_steps(const Layout& layout);

struct Command {
  enum class Kind { Go, TakeCoin, Invalid };
  Kind kind = Kind::Invalid;
  Direction direction = Direction::North;
  std::string text;  // original input for Invalid

  static Command go(Direction d) { return {Kind::Go, d, {}}; }
  static Command take_coin() { return {Kind::TakeCoin, Direction::North, {}}; }
  static Command invalid(std::string text) { return {Kind::Invalid, Direction::North, std::move(text)}; }

  // Canonical text: "go north", "take coin", or the original invalid input.
  std::string label() const;
  bool operator==(const Command&) const = default;
};

Command parse_command(std::string_view text);

struct Observation {
  std::string text;
  double reward = 0.0;
  bool done = false;
  int score = 0;
};

inline constexpr int kDefaultMaxSteps = 50;

struct GameState {
  std::shared_ptr<const Layout> layout;
  std::string location;
  bool coin_taken = false;
  std::set<std::string> visited;
  int steps = 0;
  int max_steps = kDefaultMaxSteps;
  bool done = false;
  int score = 0;

  bool coin_here() const { return !coin_taken && location == layout->coin_room; }
};

std::pair<GameState, Observation> new_game(Layout layout, int max_steps = kDefaultMaxSteps);
std::pair<GameState, Observation> step(const GameState& state, const Command& command);

std::string render_observation(const GameState& state);

inline constexpr std::string_view kBlockedText = "You can't go that way.";
inline constexpr std::string_view kInvalidText = "I don't understand that command.";
inline constexpr std::string_view kNoCoinText = "There is no coin here.";
inline constexpr std::string_view kWinText = "You pick up the coin. You won!";

}  // namespace loa
