#include "random_program.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace graphmend;

namespace {

std::string compiled(const std::string &body, const std::string &params = "x, flag") {
  return "import torch\n\n\n@torch.compile\ndef f(" + params + "):\n" + body;
}

std::string compiled_random(unsigned seed, gmtest::RandomProgram::Options opts) {
  gmtest::RandomProgram gen(seed, opts);
  return "import torch\n\n\n@torch.compile\n" + gen.function();
}

std::vector<gmtest::fs::path> fixture_files() {
  std::vector<gmtest::fs::path> out;
  for (const auto &e : gmtest::fs::directory_iterator(gmtest::data_dir() / "fixtures")) {
    if (e.path().extension() == ".py") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t count_kind(const FileReport &r, BreakKind k, std::optional<TagStatus> s = {}) {
  return static_cast<std::size_t>(std::count_if(r.tags.begin(), r.tags.end(), [&](const auto &t) {
    return t.kind == k && (!s || t.status == *s);
  }));
}

} // namespace

TEST_SUITE("transform") {

TEST_CASE("refusals carry a stable reason") {
  struct Case {
    const char *name;
    std::string text;
    std::string tag;
  };
  const std::vector<Case> cases{
      {"impure", compiled("    if x.sum() > 0:\n        x = x + 1\n        foo(x)\n    return x\n"),
       "6:4 DynCtrlFl true skipped impure branch"},
      {"return in branch", compiled("    if x.sum() > 0:\n        return x\n    return x + 1\n"),
       "6:4 DynCtrlFl true skipped unsupported statement in branch"},
      {"tuple target", compiled("    if x.sum() > 0:\n        a, b = x, x\n    else:\n        a, b "
                                "= x, x\n    return a\n"),
       "6:4 DynCtrlFl true skipped non-simple assignment target"},
      {"del", compiled("    y = x\n    if x.sum() > 0:\n        del y\n        x = x + 1\n    return x\n"),
       "7:4 DynCtrlFl true skipped unsupported syntax"},
      {"walrus", compiled("    if (s := x.sum()) > 0:\n        x = x + 1\n    return x\n"),
       "6:4 DynCtrlFl true skipped unsupported syntax"},
      {"static nested if",
       compiled("    n = 3\n    if x.sum() > 0:\n        if n > 0:\n            x = x + 1\n    return x\n"),
       "7:4 DynCtrlFl true skipped non-predicable nested if"},
      {"item in condition", compiled("    if x.max().item() > 0:\n        x = x + 1\n    return x\n"),
       "6:4 DynCtrlFl true skipped unfixable condition"},
      {"empty branch", compiled("    if x.sum() > 0:\n        pass\n    return x\n"),
       "6:4 DynCtrlFl true skipped no assignments"},
      {"elif of impure if", compiled("    if x.sum() > 0:\n        foo(x)\n    elif x.mean() > 0:\n "
                                     "       x = x + 1\n    return x\n"),
       "8:4 DynCtrlFl true skipped elif arm of an unfixed if"},
      {"one-sided new name", compiled("    if x.sum() > 0:\n        z = x\n    return x\n"),
       "6:4 DynCtrlFl true skipped no reaching definition"},
      {"torch not bound",
       "from torch import compile\n\n\n@compile\ndef f(x):\n    if x.sum() > 0:\n        x = x + "
       "1\n    return x\n",
       "6:4 DynCtrlFl true skipped torch module not bound by name"},
      {"print value used", compiled("    s = print(x)\n    return x\n"),
       "6:8 LoggerPrint true skipped value used"},
      {"print in branch", compiled("    if flag:\n        print(x)\n    return x\n", "x, flag=False"),
       "7:8 LoggerPrint true skipped nested in control flow"},
      {"print with keywords", compiled("    print(x, end='')\n    return x\n"),
       "6:4 LoggerPrint true skipped unsupported call form"},
      {"no return path", compiled("    print(x)\n    raise ValueError('no')\n"),
       "6:4 LoggerPrint true skipped no return path"},
  };
  for (const auto &c : cases) {
    CAPTURE(c.name);
    auto r = gmtest::fix(c.text);
    auto lines = gmtest::tag_lines(r.report);
    CHECK(std::find(lines.begin(), lines.end(), c.tag) != lines.end());
    CHECK(r.report.status == FileStatus::Ok);
  }
}

TEST_CASE("golden rewrites match up to generated names") {
  for (const char *name : {"where_select", "deferred_print"}) {
    CAPTURE(name);
    auto dir = gmtest::data_dir() / "golden";
    std::string original = gmtest::read_file(dir / (std::string(name) + ".py"));
    std::string expected = gmtest::read_file(dir / (std::string(name) + ".expected.py"));
    auto r = gmtest::fix(original);
    REQUIRE(r.report.count(TagStatus::Fixed) == 1);
    CHECK(gmtest::normalize_generated(r.new_text, original) ==
          gmtest::normalize_generated(expected, original));
  }
}

TEST_CASE("generated names avoid every name in the file") {
  std::string text = compiled("    __gm_pred_0 = 1\n    __gm_then_x_0 = 2\n    if x.sum() > 0:\n"
                              "        x = x + __gm_pred_0 + __gm_then_x_0\n    return x\n");
  auto r = gmtest::fix(text);
  REQUIRE(r.report.count(TagStatus::Fixed) == 1);
  CHECK(r.new_text.find("__gm_pred_1 = x.sum() > 0") != std::string::npos);
  CHECK(r.new_text.find("__gm_then_x_1 = x + __gm_pred_0 + __gm_then_x_0") != std::string::npos);
  CHECK(r.new_text.find("__gm_pred_0 = 1") != std::string::npos);
}

TEST_CASE("targets are merged in order of first assignment") {
  std::string text = compiled("    a = x\n    b = x\n    c = x\n    if x.sum() > 0:\n"
                              "        b = x + 1\n        a = x + 2\n    else:\n"
                              "        c = x + 3\n        b = x + 4\n    return a + b + c\n");
  auto ir = gmtest::build(text);
  auto plan = plan_fixes(ir, detect_breaks(ir, find_entry_points(ir), AnalysisConfig{}),
                         AnalysisConfig{});
  REQUIRE(plan.rewrites.size() == 1);
  const auto &p = std::get<PredicationRewrite>(plan.rewrites[0]);
  CHECK(p.targets == std::vector<std::string>{"b", "a", "c"});
  CHECK(p.then_exprs.at("c") == kPriorValue);
  CHECK(p.else_exprs.at("a") == kPriorValue);
  CHECK(p.else_exprs.at("b") == "x + 4");
  auto r = gmtest::fix(text);
  CHECK(r.new_text.find("    a = torch.where(__gm_pred_0, __gm_then_a_0, a)\n") !=
        std::string::npos);
  CHECK(r.new_text.find("    c = torch.where(__gm_pred_0, c, __gm_else_c_0)\n") !=
        std::string::npos);
}

TEST_CASE("a second pass changes nothing") {
  for (const auto &p : fixture_files()) {
    CAPTURE(p.filename().string());
    auto first = gmtest::fix(gmtest::read_file(p), p.filename().string());
    auto second = gmtest::fix(first.new_text, p.filename().string());
    CHECK(second.new_text == first.new_text);
    CHECK(second.report.count(TagStatus::Fixed) == 0);
  }
  for (unsigned seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    std::string text = compiled_random(seed, {.max_depth = 3, .max_nodes = 14});
    CAPTURE(text);
    auto first = gmtest::fix(text);
    REQUIRE(first.report.status == FileStatus::Ok);
    auto second = gmtest::fix(first.new_text);
    CHECK(second.new_text == first.new_text);
  }
}

TEST_CASE("every fixable tag is fixed or carries a reason") {
  std::vector<FileReport> reports;
  for (const auto &p : fixture_files()) {
    reports.push_back(gmtest::fix(gmtest::read_file(p)).report);
  }
  for (unsigned seed = 0; seed < 200; ++seed) {
    reports.push_back(gmtest::fix(compiled_random(seed, {.max_depth = 3, .max_nodes = 14})).report);
  }
  std::size_t fixed = 0;
  for (const auto &r : reports) {
    for (const auto &t : r.tags) {
      if (t.fixable) {
        CHECK(t.status != TagStatus::Unfixable);
        CHECK((t.status == TagStatus::Fixed) == t.reason.empty());
      } else {
        CHECK(t.status == TagStatus::Unfixable);
        CHECK(!t.reason.empty());
      }
      fixed += t.status == TagStatus::Fixed;
    }
  }
  CHECK(fixed >= 50);
}

TEST_CASE("fully predicated functions have no conditional edges on tensor conditions") {
  int fully = 0;
  for (unsigned seed = 0; seed < 1500; ++seed) {
    CAPTURE(seed);
    std::string text = compiled_random(seed, {.max_depth = 3, .loops = false, .max_nodes = 12});
    auto first = gmtest::fix(text);
    std::size_t dyn = count_kind(first.report, BreakKind::DynCtrlFl);
    if (dyn == 0 || count_kind(first.report, BreakKind::DynCtrlFl, TagStatus::Fixed) != dyn) {
      continue;
    }
    ++fully;
    CAPTURE(first.new_text);
    auto after = gmtest::build(first.new_text);
    auto d = detect_breaks(after, find_entry_points(after), AnalysisConfig{});
    for (const auto &t : d.tags) {
      CHECK(t.kind != BreakKind::DynCtrlFl);
    }
    // Only ifs on untainted conditions may remain.
    for (const auto &cfg : after.cfgs()) {
      for (const auto &e : cfg.edges()) {
        if (e.kind == EdgeKind::TrueBranch) {
          NodeId stmt = *cfg.nodes()[e.from].stmt;
          auto &taint = d.taint.at(cfg.function());
          CHECK(!expr_tainted(after, AnalysisConfig{}, taint.in[e.from], *after.tree().test(stmt)));
        }
      }
    }
  }
  CHECK(fully >= 30);
}

TEST_CASE("deferral hoists every dominated return") {
  std::string text = compiled("    print('a', x)\n    if flag:\n        return x + 1\n    return x * 2\n",
                              "x, flag=False");
  auto r = gmtest::fix(text);
  REQUIRE(r.report.count(TagStatus::Fixed) == 1);
  CHECK(r.new_text == compiled("    __gm_defer_0 = ('a', x)\n    if flag:\n"
                               "        __gm_ret_0 = x + 1\n        print(*__gm_defer_0)\n"
                               "        return __gm_ret_0\n"
                               "    __gm_ret_1 = x * 2\n    print(*__gm_defer_0)\n"
                               "    return __gm_ret_1\n",
                               "x, flag=False"));
}

TEST_CASE("apply_plan leaves a consistent IR and reports its edits") {
  auto ir = gmtest::build(gmtest::read_file(gmtest::data_dir() / "golden" / "where_select.py"));
  AnalysisConfig config;
  auto plan = plan_fixes(ir, detect_breaks(ir, find_entry_points(ir), config), config);
  CHECK(apply_plan(ir, plan) == plan_edits(gmtest::build(gmtest::read_file(
                                               gmtest::data_dir() / "golden" / "where_select.py")),
                                           plan)
                                    .size());
  CHECK(ir.consistent());
  CHECK(ir.source().text().find("torch.where(") != std::string::npos);
}

} // TEST_SUITE
