#include "support.hpp"

#include <json.hpp>

#include <doctest.h>

using json = nlohmann::json;

namespace {

const std::string kClean = "import torch\n\n\n@torch.compile\ndef f(x):\n    return x + 1\n";
const std::string kFixable = "import torch\n\n\n@torch.compile\ndef f(x):\n    print(x)\n"
                             "    if x.sum() > 0:\n        x = x + 1\n    return x\n";
const std::string kPartial = "import torch\n\n\n@torch.compile\ndef f(x):\n    print(x)\n"
                             "    return x.max().item()\n";

/// Runs the CLI inside `dir`. stderr is discarded.
gmtest::ProcResult cli(const gmtest::fs::path &dir, const std::string &args) {
  return gmtest::run("cd " + gmtest::shell_quote(dir.string()) + " && " +
                     gmtest::shell_quote(GM_CLI) + " " + args);
}

/// Path -> content of every regular file under `dir`.
std::map<std::string, std::string> snapshot(const gmtest::fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : gmtest::fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out[gmtest::fs::relative(e.path(), dir).string()] = gmtest::read_file(e.path());
    }
  }
  return out;
}

struct Workspace {
  gmtest::TempDir tmp;
  Workspace() {
    gmtest::write_file(tmp.path() / "clean.py", kClean);
    gmtest::write_file(tmp.path() / "fixable.py", kFixable);
    gmtest::write_file(tmp.path() / "pkg" / "partial.py", kPartial);
    gmtest::write_file(tmp.path() / "bad.py", "def f(:\n");
  }
  [[nodiscard]] const gmtest::fs::path &dir() const { return tmp.path(); }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  Workspace w;
  struct Case {
    std::string args;
    int code;
  };
  for (const Case &c : std::vector<Case>{
           {"analyze clean.py", 0},
           {"analyze fixable.py", 1},
           {"analyze pkg/partial.py", 1},
           {"analyze bad.py", 2},
           {"analyze missing.py", 2},
           {"fix --check clean.py", 0},
           {"fix --check fixable.py", 1},
           {"fix --diff clean.py", 0},
           {"fix --diff fixable.py", 0},
           {"fix --diff pkg/partial.py", 1},
           {"fix --diff bad.py", 2},
           {"fix clean.py", 2},
           {"fix --diff --check clean.py", 2},
           {"analyze --format yaml clean.py", 2},
           {"analyze", 2},
           {"--version", 0},
       }) {
    CAPTURE(c.args);
    CHECK(cli(w.dir(), c.args).exit_code == c.code);
  }
}

TEST_CASE("check and analyze modes never write") {
  Workspace w;
  auto before = snapshot(w.dir());
  cli(w.dir(), "fix --check .");
  cli(w.dir(), "analyze .");
  cli(w.dir(), "fix --diff .");
  CHECK(snapshot(w.dir()) == before);
}

TEST_CASE("in-place rewrites only changed files") {
  Workspace w;
  auto r = cli(w.dir(), "fix --in-place clean.py fixable.py pkg");
  CHECK(r.exit_code == 1);
  CHECK(gmtest::read_file(w.dir() / "clean.py") == kClean);
  CHECK(gmtest::read_file(w.dir() / "fixable.py") == gmtest::fix(kFixable).new_text);
  CHECK(gmtest::read_file(w.dir() / "pkg" / "partial.py") == gmtest::fix(kPartial).new_text);
  CHECK(cli(w.dir(), "fix --in-place fixable.py").exit_code == 0);
  CHECK(gmtest::read_file(w.dir() / "fixable.py") == gmtest::fix(kFixable).new_text);
}

TEST_CASE("--out mirrors the input tree") {
  Workspace w;
  gmtest::fs::remove(w.dir() / "bad.py");
  auto before = snapshot(w.dir());
  CHECK(cli(w.dir(), "fix --out out clean.py fixable.py pkg").exit_code == 1);
  CHECK(gmtest::read_file(w.dir() / "out" / "clean.py") == kClean);
  CHECK(gmtest::read_file(w.dir() / "out" / "fixable.py") == gmtest::fix(kFixable).new_text);
  CHECK(gmtest::fs::exists(w.dir() / "out" / "pkg" / "partial.py"));
  for (const auto &[path, text] : before) {
    CHECK(gmtest::read_file(w.dir() / path) == text);
  }
}

TEST_CASE("--diff output applies with patch") {
  Workspace w;
  auto r = cli(w.dir(), "fix --diff fixable.py");
  REQUIRE(r.exit_code == 0);
  gmtest::write_file(w.dir() / "p.diff", r.out);
  REQUIRE(gmtest::run("cd " + gmtest::shell_quote(w.dir().string()) + " && patch -s -p1 < p.diff")
              .exit_code == 0);
  CHECK(gmtest::read_file(w.dir() / "fixable.py") == gmtest::fix(kFixable).new_text);
}

TEST_CASE("JSON report is stable and complete") {
  Workspace w;
  gmtest::fs::remove(w.dir() / "bad.py");
  auto a = cli(w.dir(), "analyze --format json --no-timing .");
  auto b = cli(w.dir(), "analyze --format json --no-timing -j 4 .");
  CHECK(a.out == b.out);
  json doc = json::parse(a.out);
  CHECK(doc["mode"] == "analyze");
  REQUIRE(doc["files"].size() == 3);
  std::vector<std::string> paths;
  for (const auto &f : doc["files"]) {
    paths.push_back(f["path"]);
    CHECK(!f.contains("timing_ms"));
  }
  CHECK(paths == std::vector<std::string>{"clean.py", "fixable.py", "pkg/partial.py"});
  CHECK(doc["totals"]["found"] == 4);
  CHECK(doc["totals"]["fixed"] == 3);
  CHECK(doc["totals"]["unfixable"] == 1);

  auto timed = json::parse(cli(w.dir(), "analyze --format json fixable.py").out);
  CHECK(timed["files"][0].contains("timing_ms"));
}

TEST_CASE("--report writes the JSON document alongside text output") {
  Workspace w;
  auto r = cli(w.dir(), "fix --diff --no-timing --report rep.json fixable.py");
  CHECK(r.exit_code == 0);
  json doc = json::parse(gmtest::read_file(w.dir() / "rep.json"));
  CHECK(doc["mode"] == "diff");
  CHECK(doc["files"][0]["changed"] == true);
}

TEST_CASE("the subcommand defaults to analyze") {
  Workspace w;
  auto a = cli(w.dir(), "--format json --no-timing fixable.py");
  auto b = cli(w.dir(), "analyze --format json --no-timing fixable.py");
  CHECK(a.exit_code == 1);
  CHECK(a.out == b.out);
}

TEST_CASE("directory discovery skips hidden directories") {
  Workspace w;
  gmtest::write_file(w.dir() / ".venv" / "lib.py", kFixable);
  gmtest::write_file(w.dir() / "notes.txt", "not python");
  json doc = json::parse(cli(w.dir(), "analyze --format json --no-timing .").out);
  for (const auto &f : doc["files"]) {
    CHECK(f["path"].get<std::string>().find(".venv") == std::string::npos);
  }
  CHECK(doc["files"].size() == 4);
}

TEST_CASE("attribute table from the environment or a flag") {
  Workspace w;
  gmtest::write_file(w.dir() / "t.txt", "sum = static\n");
  auto flag = json::parse(
      cli(w.dir(), "analyze --format json --no-timing --attr-table t.txt fixable.py").out);
  CHECK(flag["totals"]["found"] == 1);
  auto r = gmtest::run("cd " + gmtest::shell_quote(w.dir().string()) +
                       " && GRAPHMEND_ATTR_TABLE=t.txt " + gmtest::shell_quote(GM_CLI) +
                       " analyze --format json --no-timing fixable.py");
  CHECK(json::parse(r.out)["totals"]["found"] == 1);
  CHECK(cli(w.dir(), "analyze --attr-table missing.txt fixable.py").exit_code == 2);
}

TEST_CASE("--dump-ir prints scopes and edges") {
  Workspace w;
  auto r = cli(w.dir(), "analyze --dump-ir clean.py");
  CHECK(r.out.find("scope 1 function function-def@4:0 'f'") != std::string::npos);
  CHECK(r.out.find("cfg f function-def@4:0 nodes=3 edges=2") != std::string::npos);
}

} // TEST_SUITE
