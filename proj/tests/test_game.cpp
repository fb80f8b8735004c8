#include <doctest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <random>

#include "loa/game.hpp"
#include "loa/rng.hpp"

using namespace loa;

namespace {

// Shortest command count computed from the exported connection list only.
int bfs_oracle(const nlohmann::json& layout) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& c : layout["connections"]) {
    adj[c["from"]].push_back(c["to"]);
    adj[c["to"]].push_back(c["from"]);
  }
  std::map<std::string, int> dist{{layout["start"], 0}};
  std::deque<std::string> queue{layout["start"]};
  while (!queue.empty()) {
    const std::string room = queue.front();
    queue.pop_front();
    for (const std::string& next : adj[room]) {
      if (dist.emplace(next, dist[room] + 1).second) queue.push_back(next);
    }
  }
  return dist.at(layout["coin"]) + 1;
}

void check_symmetric(const Layout& layout) {
  for (const auto& [key, to] : layout.connections) {
    auto back = layout.neighbor(to, opposite(key.second));
    REQUIRE(back);
    CHECK(*back == key.first);
  }
}

}  // namespace

TEST_SUITE("directions") {
  TEST_CASE("opposite is an involution") {
    for (Direction d : kDirections) {
      CHECK(opposite(opposite(d)) == d);
      CHECK(opposite(d) != d);
      CHECK(direction_from_string(to_string(d)) == d);
    }
    CHECK_FALSE(direction_from_string("up"));
  }

  TEST_CASE("lcg sequence") {
    Lcg rng(0);
    CHECK(rng.next() == 1442695040888963407ULL);
    CHECK(rng.next() == 1442695040888963407ULL * 6364136223846793005ULL + 1442695040888963407ULL);
  }
}

TEST_SUITE("generate_layout") {
  TEST_CASE("single move layout has two rooms") {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 999ULL}) {
      const Layout l = generate_layout(1, 0, seed);
      CHECK(l.rooms.size() == 2);
      CHECK(l.connections.size() == 2);
      CHECK(l.start == "A");
      CHECK(l.coin_room == "B");
      CHECK(optimal_steps(l) == 2);
    }
  }

  TEST_CASE("chain 5 with 3 branches, seed 7") {
    const Layout l = generate_layout(5, 3, 7);
    CHECK(l.rooms.size() == 9);
    CHECK(optimal_steps(l) == 6);
    CHECK(bfs_oracle(to_json(l)) == 6);
    CHECK_NOTHROW(l.validate());
    check_symmetric(l);
  }

  TEST_CASE("too many branches is an error") {
    CHECK_THROWS_WITH_AS(generate_layout(2, 5, 0), doctest::Contains("branches"), GameError);
    CHECK_THROWS_AS(generate_layout(0, 0, 0), GameError);
    CHECK_THROWS_AS(generate_layout(3, -1, 0), GameError);
  }

  TEST_CASE("unbranched chains are solved in n + 1 commands") {
    for (int n = 1; n <= 10; ++n) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Layout l = generate_layout(n, 0, seed);
        CHECK(optimal_steps(l) == n + 1);
        CHECK(bfs_oracle(to_json(l)) == n + 1);
      }
    }
    CHECK(optimal_steps(generate_layout(10, 0, 3)) == 11);
  }

  TEST_CASE("branched layouts: symmetric, valid, deterministic, branches never shorten the path") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const int n = 1 + static_cast<int>(seed % 8);
      const int b = static_cast<int>(seed % 3) % (n + 1);
      Layout l;
      try {
        l = generate_layout(n, b, seed);
      } catch (const GameError&) {
        continue;
      }
      CHECK(l.rooms.size() == static_cast<std::size_t>(n + 1 + b));
      CHECK(optimal_steps(l) == n + 1);
      CHECK(bfs_oracle(to_json(l)) == n + 1);
      check_symmetric(l);
      CHECK(to_json(generate_layout(n, b, seed)) == to_json(l));
    }
  }

  TEST_CASE("room names continue past Z") {
    const Layout l = generate_layout(30, 0, 1);
    CHECK(l.rooms[25] == "Z");
    CHECK(l.rooms[26] == "AA");
    CHECK(l.rooms[27] == "AB");
  }
}

TEST_SUITE("play") {
  TEST_CASE("FIX-A walkthrough texts") {
    auto [s0, o0] = new_game(fixture_fix_a());
    CHECK(o0.text == "= Room A =\nYou are in room A. There is an exit to the north.");
    CHECK(o0.score == 0);
    CHECK(s0.visited == std::set<std::string>{"A"});
    CHECK(optimal_steps(*s0.layout) == 3);

    auto [s1, o1] = step(s0, parse_command("go north"));
    CHECK(o1.text == "= Room B =\nYou are in room B. There are exits to the east and south.");
    CHECK(o1.reward == 0.0);
    CHECK(s1.location == "B");

    auto [s2, o2] = step(s1, parse_command("go west"));
    CHECK(o2.text == "You can't go that way.");
    CHECK(s2.location == "B");
    CHECK(s2.steps == 2);

    auto [s3, o3] = step(s2, parse_command("go east"));
    CHECK(o3.text == "= Room C =\nYou are in room C. There is an exit to the west. There is a coin here.");

    auto [s4, o4] = step(s3, parse_command("take coin"));
    CHECK(o4.text == "You pick up the coin. You won!");
    CHECK(o4.reward == 1.0);
    CHECK(o4.done);
    CHECK(o4.score == 1);
    CHECK_THROWS_AS(step(s4, parse_command("go west")), GameError);
  }

  TEST_CASE("invalid command and missing coin") {
    auto [s0, o0] = new_game(fixture_fix_a());
    auto [s1, o1] = step(s0, parse_command("open mailbox"));
    CHECK(o1.text == "I don't understand that command.");
    CHECK(s1.location == s0.location);
    CHECK(s1.visited == s0.visited);
    auto [s2, o2] = step(s1, parse_command("take coin"));
    CHECK(o2.text == "There is no coin here.");
    CHECK(o2.reward == 0.0);
  }

  TEST_CASE("three exits use a serial comma") {
    Layout l;
    l.rooms = {"A", "B", "C", "D"};
    l.connect("A", Direction::North, "B");
    l.connect("A", Direction::East, "C");
    l.connect("A", Direction::West, "D");
    l.start = "A";
    l.coin_room = "A";
    auto [s, o] = new_game(l);
    CHECK(o.text == "= Room A =\nYou are in room A. There are exits to the north, east, and west. There is a coin here.");
  }

  TEST_CASE("max steps ends the game") {
    CHECK_THROWS_AS(new_game(fixture_fix_a(), 0), GameError);
    auto [s0, o0] = new_game(fixture_fix_a(), 2);
    auto [s1, o1] = step(s0, parse_command("go south"));
    CHECK_FALSE(o1.done);
    auto [s2, o2] = step(s1, parse_command("go south"));
    CHECK(o2.done);
    CHECK(s2.done);
    CHECK(o2.score == 0);
  }

  TEST_CASE("random walks: determinism, return trips, reward conservation") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> commands = {"go north", "go east", "go south", "go west", "take coin", "jump"};
    for (int trial = 0; trial < 50; ++trial) {
      const Layout l = generate_layout(1 + trial % 7, trial % 2, trial);
      std::vector<std::string> script;
      for (int i = 0; i < 60; ++i) script.push_back(commands[rng() % commands.size()]);

      auto run = [&](std::vector<std::string>* texts) {
        auto [s, o] = new_game(l);
        double total = 0.0;
        texts->push_back(o.text);
        for (const std::string& c : script) {
          if (s.done) break;
          const Command cmd = parse_command(c);
          auto [next, obs] = step(s, cmd);
          if (cmd.kind == Command::Kind::Go && next.location != s.location && !next.done) {
            auto [back, back_obs] = step(next, Command::go(opposite(cmd.direction)));
            CHECK(back.location == s.location);
          }
          CHECK(next.visited.contains(next.location));
          CHECK(next.visited.contains(l.start));
          CHECK(next.done == (next.coin_taken || next.steps == next.max_steps));
          total += obs.reward;
          texts->push_back(obs.text);
          s = std::move(next);
        }
        return total;
      };
      std::vector<std::string> a, b;
      const double ra = run(&a);
      const double rb = run(&b);
      CHECK(a == b);
      CHECK(ra == rb);
      CHECK((ra == 0.0 || ra == 1.0));
    }
  }
}

TEST_SUITE("parse_command") {
  TEST_CASE("grammar") {
    CHECK(parse_command("Go  North") == Command::go(Direction::North));
    CHECK(parse_command("  take COIN ") == Command::take_coin());
    CHECK(parse_command("open mailbox").kind == Command::Kind::Invalid);
    CHECK(parse_command("open mailbox").label() == "open mailbox");
    CHECK(parse_command("go").kind == Command::Kind::Invalid);
    CHECK(parse_command("go up").kind == Command::Kind::Invalid);
    CHECK(parse_command("").kind == Command::Kind::Invalid);
    CHECK(Command::go(Direction::West).label() == "go west");
    CHECK(Command::take_coin().label() == "take coin");
  }
}

TEST_SUITE("layout files") {
  TEST_CASE("json round trip and mirror completion") {
    const Layout l = generate_layout(5, 3, 7);
    const Layout back = layout_from_json(to_json(l));
    CHECK(to_json(back) == to_json(l));

    const auto doc = nlohmann::json::parse(R"js({"rooms":["A","B","C"],
      "connections":[{"from":"A","dir":"north","to":"B"},{"from":"B","dir":"east","to":"C"}],
      "start":"A","coin":"C"})js");
    const Layout fix = layout_from_json(doc);
    CHECK(fix.neighbor("B", Direction::South) == "A");
    CHECK(to_json(fix) == to_json(fixture_fix_a()));

    const auto path = std::filesystem::temp_directory_path() / "loa_test_layout.json";
    {
      std::ofstream out(path);
      out << doc.dump();
    }
    CHECK(optimal_steps(load_layout_file(path)) == 3);
    std::filesystem::remove(path);
  }

  TEST_CASE("invalid layouts") {
    CHECK_THROWS_AS(layout_from_json(nlohmann::json::parse(R"js({"rooms":["A"],"start":"A"})js")), GameError);
    CHECK_THROWS_AS(layout_from_json(nlohmann::json::parse(R"js({"rooms":["A","B"],"start":"A","coin":"B"})js")),
                    GameError);
    CHECK_THROWS_AS(layout_from_json(nlohmann::json::parse(
                        R"js({"rooms":["A","B"],"connections":[{"from":"A","dir":"up","to":"B"}],"start":"A","coin":"B"})js")),
                    GameError);
    CHECK_THROWS_AS(layout_from_json(nlohmann::json::parse(
                        R"js({"rooms":["A","B","C"],"connections":[{"from":"A","dir":"north","to":"B"},
                        {"from":"A","dir":"north","to":"C"}],"start":"A","coin":"B"})js")),
                    GameError);
    CHECK_THROWS_AS(load_layout_file("/nonexistent/layout.json"), GameError);
  }
}
