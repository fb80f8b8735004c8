#include <doctest.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "loa/cli.hpp"
#include "loa/server.hpp"
#include "loa/snapshot.hpp"

using namespace loa;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "loa_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

int shell(const std::string& args) {
  const int status = std::system((std::string(LOA_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("usage") {
  TEST_CASE("help and missing subcommand") {
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"fly"}).code == kExitUsage);
    CHECK(run({"train", "--bogus"}).code == kExitUsage);
  }

  TEST_CASE("binary exit codes") {
    CHECK(shell("--help") == 0);
    CHECK(shell("play --rulebook nope") == 2);
    CHECK(shell("train --episodes 0") == 2);
    CHECK(shell("train --layout fix_a --episodes 2 --out /nonexistent/dir/run.jsonl") == 1);
    CHECK(shell("export-lnn --format xml") == 2);
  }
}

TEST_SUITE("play") {
  TEST_CASE("FIX-A transcript matches the session service") {
    const Result r = run({"play", "--layout", "fix_a"}, "go north\nquit\n");
    CHECK(r.code == kExitOk);
    SessionService service;
    const auto created = service.create_session({{"layout", "fix_a"}});
    const auto stepped = service.step_session(created["session"], {{"command", "go north"}});
    CHECK(r.out.starts_with(created["observation"].get<std::string>() + "\n"));
    CHECK(r.out.find(stepped["observation"].get<std::string>() + "\nreward: 0  score: 0") != std::string::npos);
    CHECK(r.out.find("  * go north   [1.000, 1.000]") != std::string::npos);
    CHECK(r.out.find("  * go east    [1.000, 1.000]") != std::string::npos);
  }

  TEST_CASE("winning ends the loop") {
    const Result r = run({"play", "--layout", "fix_a"}, "go north\ngo east\ntake coin\n");
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("You pick up the coin. You won!\nreward: 1  score: 1") != std::string::npos);
    CHECK(r.out.find("You solved it in 3 steps.") != std::string::npos);
  }

  TEST_CASE("bad options") {
    CHECK(run({"play", "--rulebook", "nope"}, "quit\n").code == kExitUsage);
    CHECK(run({"play", "--game", "zork"}, "quit\n").code == kExitUsage);
    CHECK(run({"play", "--layout", "/nonexistent/layout.json"}, "quit\n").code == kExitFailure);
    CHECK(run({"play", "--chain-length", "0"}, "quit\n").code == kExitUsage);
  }
}

TEST_SUITE("train") {
  TEST_CASE("loa is optimal from the first episode and files are reproducible") {
    const auto a = scratch("train_a.jsonl"), b = scratch("train_b.jsonl");
    const Result r = run({"train", "--agent", "loa", "--chain-length", "5", "--branches", "2", "--seed", "4",
                          "--episodes", "10", "--out", a.string()});
    REQUIRE(r.code == kExitOk);
    const auto episodes = metrics_from_jsonl(slurp(a));
    REQUIRE(episodes.size() == 10);
    for (const auto& m : episodes) CHECK(m.steps == 6);
    CHECK(r.out.find("median_steps=6") != std::string::npos);
    CHECK(r.out.find("optimal=6") != std::string::npos);
    CHECK(r.out.find("first_quintile=6 last_quintile=6") != std::string::npos);

    run({"train", "--agent", "loa", "--chain-length", "5", "--branches", "2", "--seed", "4", "--episodes", "10",
         "--out", b.string()});
    CHECK(slurp(a) == slurp(b));

    const Result t1 = run({"train", "--agent", "tabq", "--episodes", "30", "--seed", "2"});
    const Result t2 = run({"train", "--agent", "tabq", "--episodes", "30", "--seed", "2"});
    CHECK(t1.out == t2.out);
  }

  TEST_CASE("rejections") {
    CHECK(run({"train", "--episodes", "0"}).code == kExitUsage);
    CHECK(run({"train", "--agent", "dqn"}).code == kExitUsage);
    CHECK(run({"train", "--agent", "loa(nope)"}).code == kExitUsage);
    CHECK(run({"train", "--layout", "fix_a", "--out", "/nonexistent/dir/run.jsonl"}).code == kExitFailure);
  }
}

TEST_SUITE("compare") {
  TEST_CASE("table ordering, determinism and output files") {
    const auto dir = scratch("compare");
    fs::remove_all(dir);
    const std::vector<std::string> args = {"compare", "--agents", "random,loa", "--chain-length", "5",
                                           "--branches", "2", "--episodes", "40", "--seed", "1",
                                           "--out", dir.string()};
    const Result r = run(args);
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("loa(avoid_revisit)") < r.out.find("random"));
    CHECK(fs::exists(dir / "loa_avoid_revisit.jsonl"));
    CHECK(fs::exists(dir / "random.jsonl"));
    CHECK(slurp(dir / "comparison.txt").find("random") != std::string::npos);
    CHECK(run(args).out == r.out);
  }
}

TEST_SUITE("export-lnn") {
  TEST_CASE("dot output fills go north red for the first room") {
    const Result r = run({"export-lnn", "--rulebook", "simple_nav", "--facts", "found(north)", "--format", "dot"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("\"go(north)\" [label=\"go(north)\", shape=box, style=filled, fillcolor=red") != std::string::npos);
    CHECK(r.out.find("\"go(east)\" [label=\"go(east)\", shape=box, style=filled, fillcolor=white") != std::string::npos);
  }

  TEST_CASE("json output rebuilds into the same graph") {
    const auto path = scratch("lnn.json");
    const Result r = run({"export-lnn", "--rulebook", "constraint_revisit", "--facts",
                          "found(east),found(south),visited(south)", "--out", path.string()});
    REQUIRE(r.code == kExitOk);
    const auto doc = nlohmann::json::parse(slurp(path));
    CHECK(export_snapshot(graph_from_snapshot(doc)) == doc);
  }

  TEST_CASE("bad facts and formats") {
    CHECK(run({"export-lnn", "--facts", "smell(north)"}).code == kExitUsage);
    CHECK(run({"export-lnn", "--format", "xml"}).code == kExitUsage);
  }
}

TEST_SUITE("serve") {
  TEST_CASE("occupied port fails") {
    SessionService service;
    HttpServer holder(service, {});
    const int port = holder.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    const Result r = run({"serve", "--port", std::to_string(port)});
    CHECK(r.code == kExitFailure);
    CHECK(r.err.find("cannot listen") != std::string::npos);
  }

  TEST_CASE("missing ui directory is a usage error") {
    CHECK(run({"serve", "--port", "0", "--ui-dir", "/nonexistent/ui"}).code == kExitUsage);
  }

  TEST_CASE("the binary answers the games probe and stops on SIGINT") {
    int fds[2];
    REQUIRE(pipe(fds) == 0);
    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl(LOA_CLI_PATH, LOA_CLI_PATH, "serve", "--port", "0", static_cast<char*>(nullptr));
      _exit(127);
    }
    close(fds[1]);
    std::string line;
    char c;
    while (read(fds[0], &c, 1) == 1 && c != '\n') line += c;
    close(fds[0]);
    REQUIRE(line.starts_with("listening on http://127.0.0.1:"));
    const int port = std::stoi(line.substr(line.rfind(':') + 1));

    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/api/games");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body)["games"][0]["id"] == "coin_collector");

    kill(pid, SIGINT);
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
  }
}
