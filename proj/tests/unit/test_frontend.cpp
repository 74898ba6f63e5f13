#include "support.hpp"

#include "graphmend/lexer.hpp"
#include "graphmend/parser.hpp"

#include <doctest.h>

using namespace graphmend;

namespace {

std::vector<gmtest::fs::path> all_python_inputs() {
  std::vector<gmtest::fs::path> out;
  for (const char *sub : {"fixtures", "corpus", "cfg", "golden"}) {
    auto dir = gmtest::data_dir() / sub;
    if (!gmtest::fs::exists(dir)) {
      continue;
    }
    for (const auto &e : gmtest::fs::recursive_directory_iterator(dir)) {
      if (e.path().extension() == ".py") {
        out.push_back(e.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// First node of `kind` in source pre-order.
NodeId first_of_kind(const Tree &tree, NodeKind kind) {
  std::optional<NodeId> found;
  tree.walk(0, [&](NodeId id) {
    if (!found && tree[id].kind == kind) {
      found = id;
    }
    return !found;
  });
  if (!found) {
    FAIL("no node of kind " << kind_name(kind));
  }
  return *found;
}

} // namespace

TEST_SUITE("frontend") {

TEST_CASE("positions are 1-based lines and 0-based byte columns") {
  SourceModule src("p.py", "ab\ncd\r\nef");
  CHECK(src.position(0) == LineCol{1, 0});
  CHECK(src.position(1) == LineCol{1, 1});
  CHECK(src.position(3) == LineCol{2, 0});
  CHECK(src.position(7) == LineCol{3, 0});
  CHECK(src.position(8) == LineCol{3, 1});
  CHECK(src.line_start(4) == 3);
  CHECK(src.line_end(4) == 5);
  CHECK(src.newline() == "\n");
  CHECK(SourceModule("q.py", "a\r\nb").newline() == "\r\n");
  CHECK(src.slice({3, 5}) == "cd");
}

TEST_CASE("emit_source with no edits reproduces the text") {
  std::string text = "x = 1  # c\n\n\tif x:\n\t\tpass\n";
  CHECK(emit_source(text, {}) == text);
}

TEST_CASE("emit_source applies edits independent of their order") {
  std::string text = "alpha beta gamma";
  std::vector<SpanEdit> edits{{{6, 10}, "B"}, {{0, 5}, "A"}, {{16, 16}, "!"}};
  CHECK(emit_source(text, edits) == "A B gamma!");
  std::reverse(edits.begin(), edits.end());
  CHECK(emit_source(text, edits) == "A B gamma!");
}

TEST_CASE("overlapping or same-offset edits are rejected") {
  std::string text = "abcdef";
  std::vector<SpanEdit> overlap{{{0, 3}, "x"}, {{2, 4}, "y"}};
  CHECK_THROWS_AS(emit_source(text, overlap), OverlapError);
  std::vector<SpanEdit> same_start{{{2, 2}, "x"}, {{2, 4}, "y"}};
  CHECK_THROWS_AS(emit_source(text, same_start), OverlapError);
  std::vector<SpanEdit> out_of_range{{{4, 9}, "x"}};
  CHECK_THROWS_AS(emit_source(text, out_of_range), EditError);
}

TEST_CASE("unified diff of identical texts is empty") {
  CHECK(unified_diff("a", "b", "x\ny\n", "x\ny\n").empty());
}

TEST_CASE("unified diff has headers, hunk ranges and context") {
  std::string a = "1\n2\n3\n4\n5\n6\n7\n8\n";
  std::string b = "1\n2\n3\nfour\n5\n6\n7\n8\n";
  std::string d = unified_diff("a/f.py", "b/f.py", a, b);
  CHECK(d == "--- a/f.py\n+++ b/f.py\n@@ -1,7 +1,7 @@\n 1\n 2\n 3\n-4\n+four\n 5\n 6\n 7\n");
}

TEST_CASE("unified diff output applies with patch") {
  gmtest::TempDir tmp;
  std::string a = "def f():\n    x = 1\n    return x\n";
  std::string b = "def f():\n    y = 2\n    x = 1\n    return x + y\n";
  gmtest::write_file(tmp.path() / "f.py", a);
  gmtest::write_file(tmp.path() / "f.diff", unified_diff("a/f.py", "b/f.py", a, b));
  auto r = gmtest::run("cd " + gmtest::shell_quote(tmp.path().string()) +
                       " && patch -s -p1 < f.diff");
  REQUIRE(r.exit_code == 0);
  CHECK(gmtest::read_file(tmp.path() / "f.py") == b);
}

TEST_CASE("round trip: every bundled Python file re-emits byte-identically") {
  auto files = all_python_inputs();
  REQUIRE(files.size() >= 20);
  for (const auto &p : files) {
    CAPTURE(p.string());
    std::string text = gmtest::read_file(p);
    SourceModule src(p.string(), text);
    Tree tree = parse_module(src);
    CHECK(tree.size() > 1);
    CHECK(emit_source(text, {}) == text);
    CHECK(verify_tree(tree, src).empty());
  }
}

TEST_CASE("node spans cover their source text") {
  std::string text = "y = (a + b) * f(c, d=1)[0]\n";
  SourceModule src("s.py", text);
  Tree tree = parse_module(src);
  NodeId binop = first_of_kind(tree, NodeKind::BinOp);
  CHECK(src.slice(tree[binop].span) == "(a + b) * f(c, d=1)[0]");
  NodeId inner = tree[binop].children[0];
  CHECK(src.slice(tree[inner].span) == "(a + b)");
  CHECK((tree[inner].flags & node_flags::kParenthesized) != 0);
  NodeId call = first_of_kind(tree, NodeKind::Call);
  CHECK(src.slice(tree[call].span) == "f(c, d=1)");
  NodeId kw = first_of_kind(tree, NodeKind::Keyword);
  CHECK(tree[kw].name == "d");
}

TEST_CASE("statement kinds and layouts") {
  std::string text = R"(import torch
from torch import nn as n2
@torch.compile(mode="max-autotune")
def f(self, x: int, *args, k=2, **kw) -> int:
    x += 1
    z: int = 3
    del z
    global g
    with open("p") as fh:
        pass
    try:
        raise ValueError("e")
    except (ValueError, KeyError) as e:
        pass
    finally:
        pass
    assert x, "m"
    return [i for i in range(3) if i], {k: v for k, v in kw.items()}, lambda q: q + 1
class C(nn.Module):
    pass
)";
  SourceModule src("k.py", text);
  Tree tree = parse_module(src);
  std::map<NodeKind, int> counts;
  for (const auto &n : tree.nodes()) {
    ++counts[n.kind];
  }
  for (NodeKind k : {NodeKind::Import, NodeKind::ImportFrom, NodeKind::Decorator,
                     NodeKind::FunctionDef, NodeKind::AugAssign, NodeKind::AnnAssign,
                     NodeKind::Delete, NodeKind::Global, NodeKind::With, NodeKind::Try,
                     NodeKind::ExceptHandler, NodeKind::Raise, NodeKind::Assert,
                     NodeKind::ListComp, NodeKind::DictComp, NodeKind::Lambda,
                     NodeKind::ClassDef}) {
    CAPTURE(kind_name(k));
    CHECK(counts[k] >= 1);
  }
  NodeId fn = first_of_kind(tree, NodeKind::FunctionDef);
  CHECK(tree[fn].name == "f");
  auto params = tree.children_of_kind(*tree.child_of_kind(fn, NodeKind::Parameters),
                                      NodeKind::Param);
  REQUIRE(params.size() == 5);
  CHECK(tree[params[2]].op == "*");
  CHECK(tree[params[4]].op == "**");
  NodeId alias = tree.children_of_kind(first_of_kind(tree, NodeKind::ImportFrom),
                                       NodeKind::ImportAlias)[0];
  CHECK(tree[alias].name == "nn");
  CHECK(tree[alias].alias == "n2");
}

TEST_CASE("f-strings, implicit concatenation and line continuations") {
  std::string text = "s = f\"a{x!r:>{w}}\" 'b' \\\n    'c'\nt = (1,\n     2)\n";
  SourceModule src("f.py", text);
  Tree tree = parse_module(src);
  NodeId str = first_of_kind(tree, NodeKind::Str);
  CHECK((tree[str].flags & node_flags::kFString) != 0);
  CHECK(emit_source(text, {}) == text);
}

TEST_CASE("elif arms are nested If nodes named elif") {
  Tree tree = parse_module(SourceModule("e.py", "if a:\n    x = 1\nelif b:\n    x = 2\n"));
  NodeId top = first_of_kind(tree, NodeKind::If);
  auto orelse = tree.orelse(top);
  REQUIRE(orelse);
  CHECK(tree[*orelse].kind == NodeKind::If);
  CHECK(tree[*orelse].name == "elif");
  CHECK(tree[*orelse].pos == LineCol{3, 0});
}

TEST_CASE("syntax errors carry path, line and column") {
  struct Case {
    const char *text;
    std::uint32_t line;
  };
  for (Case c : {Case{"def f(:\n    pass\n", 1}, Case{"x = 1\nif x\n    y = 2\n", 2},
                 Case{"def f():\nreturn 1\n", 2}, Case{"x = (1,\n", 1},
                 Case{"s = 'abc\n", 1}}) {
    CAPTURE(c.text);
    try {
      (void)parse_module(SourceModule("bad.py", c.text));
      FAIL("expected SyntaxError");
    } catch (const SyntaxError &e) {
      CHECK(e.path() == "bad.py");
      CHECK(e.position().line == c.line);
      CHECK(!e.message().empty());
    }
  }
}

TEST_CASE("tokenizer drops comments and tracks indentation") {
  SourceModule src("t.py", "if a:  # c\n    b\n");
  auto toks = tokenize(src);
  int indents = 0;
  int dedents = 0;
  for (const auto &t : toks) {
    indents += t.kind == TokenKind::Indent;
    dedents += t.kind == TokenKind::Dedent;
    CHECK(src.slice(t.span).find('#') == std::string_view::npos);
  }
  CHECK(indents == 1);
  CHECK(dedents == 1);
  CHECK(toks.back().kind == TokenKind::EndMarker);
}

} // TEST_SUITE
