#include "support.hpp"

#include <json.hpp>

#include <doctest.h>

using json = nlohmann::json;
using namespace graphmend;

namespace {

std::vector<gmtest::fs::path> cases() {
  std::vector<gmtest::fs::path> out;
  for (const auto &e : gmtest::fs::directory_iterator(gmtest::data_dir() / "corpus")) {
    if (e.is_directory()) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("every case is complete") {
  auto all = cases();
  CHECK(all.size() == 8);
  for (const auto &dir : all) {
    CAPTURE(dir.filename().string());
    for (const char *f : {"original.py", "transformed.py", "expected.tags", "manifest.json"}) {
      CHECK(gmtest::fs::exists(dir / f));
    }
    json m = json::parse(gmtest::read_file(dir / "manifest.json"));
    CHECK(m["case"] == dir.filename().string());
    CHECK(m["input_spec"]["inputs"].size() >= 1);
  }
}

TEST_CASE("tool output matches the checked-in rewrite, tags and counts") {
  for (const auto &dir : cases()) {
    CAPTURE(dir.filename().string());
    json m = json::parse(gmtest::read_file(dir / "manifest.json"));
    auto r = gmtest::fix(gmtest::read_file(dir / "original.py"), "original.py");
    CHECK(r.new_text == gmtest::read_file(dir / "transformed.py"));

    auto expected = gmtest::sidecar_lines(dir / "expected.tags");
    REQUIRE(!expected.empty());
    CHECK(expected[0] == "status " + std::string(file_status_name(r.report.status)));
    CHECK(std::vector<std::string>(expected.begin() + 1, expected.end()) ==
          gmtest::tag_lines(r.report));

    const json &want = m["expected"];
    std::size_t found = r.report.found();
    std::size_t fixed = r.report.count(TagStatus::Fixed);
    CHECK(found == want["found"].get<std::size_t>());
    CHECK(fixed == want["fixed"].get<std::size_t>());
    CHECK(r.report.count(TagStatus::Unfixable) == want["unfixable"].get<std::size_t>());
    CHECK(found - fixed == want["residual_breaks"].get<std::size_t>());
    // fixed_pct is a rounded percentage derived independently of the tool.
    CHECK(want["fixed_pct"].get<double>() ==
          doctest::Approx(100.0 * static_cast<double>(fixed) / static_cast<double>(found))
              .epsilon(0.005));
  }
}

TEST_CASE("rewrites are idempotent and residual breaks stay") {
  for (const auto &dir : cases()) {
    CAPTURE(dir.filename().string());
    std::string transformed = gmtest::read_file(dir / "transformed.py");
    auto again = gmtest::fix(transformed, "transformed.py");
    CHECK(again.new_text == transformed);
    CHECK(again.report.count(TagStatus::Fixed) == 0);
    json m = json::parse(gmtest::read_file(dir / "manifest.json"));
    CHECK(again.report.found() == m["expected"]["residual_breaks"].get<std::size_t>());
  }
}

TEST_CASE("a case with only unfixable breaks is left untouched") {
  auto dir = gmtest::data_dir() / "corpus" / "moe_minicpm";
  std::string original = gmtest::read_file(dir / "original.py");
  auto r = gmtest::fix(original);
  CHECK(r.new_text == original);
  CHECK(!r.report.changed);
  CHECK(r.report.edits == 0);
}

} // TEST_SUITE
