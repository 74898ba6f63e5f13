#include "graphmend/parser.hpp"

#include <array>
#include <string_view>

namespace graphmend {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False",  "None",   "True",   "and",      "as",       "assert", "async",
    "await",  "break",  "class",  "continue", "def",      "del",    "elif",
    "else",   "except", "finally", "for",     "from",     "global", "if",
    "import", "in",     "is",     "lambda",   "nonlocal", "not",    "or",
    "pass",   "raise",  "return", "try",      "while",    "with",   "yield"};

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords) {
    if (k == s) {
      return true;
    }
  }
  return false;
}

constexpr std::array<std::string_view, 13> kAugOps = {
    "+=", "-=", "*=", "@=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", "**=", "//="};

class Parser {
public:
  explicit Parser(const SourceModule &source)
      : src_(source), text_(source.text()), tokens_(tokenize(source)) {}

  Tree run() {
    NodeId module = tree_.add(NodeKind::Module, {0, text_.size()}, {1, 0});
    while (cur().kind != TokenKind::EndMarker) {
      if (cur().kind == TokenKind::Indent) {
        fail("unexpected indent");
      }
      if (cur().kind == TokenKind::Newline) {
        advance();
        continue;
      }
      std::vector<NodeId> stmts;
      parse_statement(stmts);
      for (NodeId s : stmts) {
        tree_.adopt(module, s);
      }
    }
    return std::move(tree_);
  }

private:
  // ---- token helpers -------------------------------------------------------

  const Token &cur() const { return tokens_[idx_]; }
  const Token &peek(std::size_t n = 1) const {
    return tokens_[std::min(idx_ + n, tokens_.size() - 1)];
  }
  std::string_view tok_text(const Token &t) const {
    return text_.substr(t.span.begin, t.span.size());
  }
  std::string_view cur_text() const { return tok_text(cur()); }
  void advance() {
    if (idx_ + 1 < tokens_.size()) {
      last_end_ = cur().span.end;
      ++idx_;
    }
  }

  bool at_op(std::string_view op) const {
    return cur().kind == TokenKind::Op && cur_text() == op;
  }
  bool at_kw(std::string_view kw) const {
    return cur().kind == TokenKind::Name && cur_text() == kw;
  }
  bool accept_op(std::string_view op) {
    if (at_op(op)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_kw(std::string_view kw) {
    if (at_kw(kw)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) {
      fail("expected '" + std::string(op) + "'");
    }
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) {
      fail("expected '" + std::string(kw) + "'");
    }
  }
  std::string expect_name() {
    if (cur().kind != TokenKind::Name || is_keyword(cur_text())) {
      fail("expected identifier");
    }
    std::string s(cur_text());
    advance();
    return s;
  }

  [[noreturn]] void fail(const std::string &message) const {
    std::size_t at = cur().span.begin;
    if (cur().kind == TokenKind::Newline || cur().kind == TokenKind::EndMarker) {
      // Point at the end of the offending line rather than the next one.
      at = std::min(at, text_.size());
    }
    throw SyntaxError(src_.path(), src_.position(at), message);
  }

  NodeId make(NodeKind kind, std::size_t begin, std::size_t end) {
    return tree_.add(kind, {begin, end}, src_.position(begin));
  }
  void set_end(NodeId id, std::size_t end) { tree_[id].span.end = end; }
  std::size_t begin_of(NodeId id) const { return tree_[id].span.begin; }
  std::size_t end_of(NodeId id) const { return tree_[id].span.end; }

  bool at_expr_start() const {
    const auto &t = cur();
    switch (t.kind) {
    case TokenKind::Name: {
      auto s = tok_text(t);
      return !is_keyword(s) || s == "None" || s == "True" || s == "False" ||
             s == "not" || s == "lambda" || s == "await" || s == "yield";
    }
    case TokenKind::Number:
    case TokenKind::String:
      return true;
    case TokenKind::Op: {
      auto s = tok_text(t);
      return s == "(" || s == "[" || s == "{" || s == "-" || s == "+" || s == "~" ||
             s == "..." || s == "*";
    }
    default:
      return false;
    }
  }

  // ---- statements ----------------------------------------------------------

  void parse_statement(std::vector<NodeId> &out) {
    if (at_op("@")) {
      out.push_back(parse_decorated());
      return;
    }
    if (at_kw("def")) {
      out.push_back(parse_funcdef(cur().span.begin, {}, false));
      return;
    }
    if (at_kw("class")) {
      out.push_back(parse_classdef(cur().span.begin, {}));
      return;
    }
    if (at_kw("if")) {
      out.push_back(parse_if());
      return;
    }
    if (at_kw("while")) {
      out.push_back(parse_while());
      return;
    }
    if (at_kw("for")) {
      out.push_back(parse_for(cur().span.begin, false));
      return;
    }
    if (at_kw("try")) {
      out.push_back(parse_try());
      return;
    }
    if (at_kw("with")) {
      out.push_back(parse_with(cur().span.begin, false));
      return;
    }
    if (at_kw("async")) {
      std::size_t begin = cur().span.begin;
      advance();
      if (at_kw("def")) {
        out.push_back(parse_funcdef(begin, {}, true));
      } else if (at_kw("for")) {
        out.push_back(parse_for(begin, true));
      } else if (at_kw("with")) {
        out.push_back(parse_with(begin, true));
      } else {
        fail("invalid syntax");
      }
      return;
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(std::vector<NodeId> &out) {
    out.push_back(parse_small_statement());
    while (accept_op(";")) {
      if (cur().kind == TokenKind::Newline) {
        break;
      }
      out.push_back(parse_small_statement());
    }
    if (cur().kind != TokenKind::Newline) {
      fail("invalid syntax");
    }
    advance();
  }

  NodeId parse_suite(std::string_view label) {
    expect_op(":");
    NodeId block = make(NodeKind::Block, cur().span.begin, cur().span.begin);
    tree_[block].name = std::string(label);
    std::vector<NodeId> stmts;
    if (cur().kind == TokenKind::Newline) {
      advance();
      if (cur().kind != TokenKind::Indent) {
        fail("expected an indented block");
      }
      advance();
      while (cur().kind != TokenKind::Dedent && cur().kind != TokenKind::EndMarker) {
        if (cur().kind == TokenKind::Indent) {
          fail("unexpected indent");
        }
        parse_statement(stmts);
      }
      if (cur().kind == TokenKind::Dedent) {
        advance();
      }
    } else {
      parse_simple_statements(stmts);
    }
    for (NodeId s : stmts) {
      tree_.adopt(block, s);
    }
    tree_[block].span = {begin_of(stmts.front()), end_of(stmts.back())};
    tree_[block].pos = src_.position(begin_of(stmts.front()));
    return block;
  }

  NodeId parse_decorated() {
    std::size_t begin = cur().span.begin;
    std::vector<NodeId> decorators;
    while (at_op("@")) {
      std::size_t dbegin = cur().span.begin;
      advance();
      NodeId expr = parse_namedexpr_test();
      NodeId dec = make(NodeKind::Decorator, dbegin, end_of(expr));
      tree_.adopt(dec, expr);
      decorators.push_back(dec);
      if (cur().kind != TokenKind::Newline) {
        fail("invalid syntax");
      }
      advance();
    }
    if (at_kw("def")) {
      return parse_funcdef(begin, decorators, false);
    }
    if (at_kw("class")) {
      return parse_classdef(begin, decorators);
    }
    if (at_kw("async")) {
      advance();
      if (at_kw("def")) {
        return parse_funcdef(begin, decorators, true);
      }
    }
    fail("invalid syntax");
  }

  NodeId parse_funcdef(std::size_t begin, const std::vector<NodeId> &decorators,
                       bool is_async) {
    expect_kw("def");
    std::string name = expect_name();
    std::size_t pbegin = cur().span.begin;
    expect_op("(");
    NodeId params = make(NodeKind::Parameters, pbegin, pbegin);
    parse_parameters(params, ")", true);
    expect_op(")");
    set_end(params, last_end_);
    std::optional<NodeId> returns;
    if (accept_op("->")) {
      NodeId e = parse_test();
      returns = make(NodeKind::Annotation, begin_of(e), end_of(e));
      tree_.adopt(*returns, e);
    }
    NodeId body = parse_suite("body");
    NodeId fn = make(NodeKind::FunctionDef, begin, end_of(body));
    tree_[fn].name = std::move(name);
    if (is_async) {
      tree_[fn].flags |= node_flags::kAsync;
    }
    for (NodeId d : decorators) {
      tree_.adopt(fn, d);
    }
    tree_.adopt(fn, params);
    if (returns) {
      tree_.adopt(fn, *returns);
    }
    tree_.adopt(fn, body);
    return fn;
  }

  void parse_parameters(NodeId params, std::string_view close, bool annotations) {
    while (!at_op(close)) {
      std::size_t pbegin = cur().span.begin;
      std::string op;
      std::string name;
      if (accept_op("/")) {
        op = "/";
      } else if (accept_op("**")) {
        op = "**";
        name = expect_name();
      } else if (accept_op("*")) {
        op = "*";
        if (cur().kind == TokenKind::Name && !is_keyword(cur_text())) {
          name = expect_name();
        }
      } else {
        name = expect_name();
      }
      NodeId param = make(NodeKind::Param, pbegin, last_end_);
      tree_[param].name = name;
      tree_[param].op = op;
      tree_[param].ctx = ExprCtx::Store;
      if (annotations && !name.empty() && accept_op(":")) {
        NodeId e = parse_test();
        NodeId ann = make(NodeKind::Annotation, begin_of(e), end_of(e));
        tree_.adopt(ann, e);
        tree_.adopt(param, ann);
        set_end(param, end_of(ann));
      }
      if (op.empty() && accept_op("=")) {
        NodeId d = parse_test();
        tree_.adopt(param, d);
        set_end(param, end_of(d));
      }
      tree_.adopt(params, param);
      if (!accept_op(",")) {
        break;
      }
    }
  }

  NodeId parse_classdef(std::size_t begin, const std::vector<NodeId> &decorators) {
    expect_kw("class");
    std::string name = expect_name();
    std::optional<NodeId> bases;
    if (at_op("(")) {
      std::size_t abegin = cur().span.begin;
      advance();
      bases = make(NodeKind::Arguments, abegin, abegin);
      parse_call_arguments(*bases);
      expect_op(")");
      set_end(*bases, last_end_);
    }
    NodeId body = parse_suite("body");
    NodeId cls = make(NodeKind::ClassDef, begin, end_of(body));
    tree_[cls].name = std::move(name);
    for (NodeId d : decorators) {
      tree_.adopt(cls, d);
    }
    if (bases) {
      tree_.adopt(cls, *bases);
    }
    tree_.adopt(cls, body);
    return cls;
  }

  NodeId parse_if() {
    std::size_t begin = cur().span.begin;
    bool is_elif = at_kw("elif");
    advance();
    NodeId test = parse_namedexpr_test();
    NodeId body = parse_suite("body");
    std::optional<NodeId> orelse;
    if (at_kw("elif")) {
      orelse = parse_if();
    } else if (at_kw("else")) {
      advance();
      orelse = parse_suite("else");
    }
    NodeId node = make(NodeKind::If, begin, end_of(orelse ? *orelse : body));
    if (is_elif) {
      tree_[node].name = "elif";
    }
    tree_.adopt(node, test);
    tree_.adopt(node, body);
    if (orelse) {
      tree_.adopt(node, *orelse);
    }
    return node;
  }

  NodeId parse_while() {
    std::size_t begin = cur().span.begin;
    advance();
    NodeId test = parse_namedexpr_test();
    NodeId body = parse_suite("body");
    std::optional<NodeId> orelse;
    if (accept_kw("else")) {
      orelse = parse_suite("else");
    }
    NodeId node = make(NodeKind::While, begin, end_of(orelse ? *orelse : body));
    tree_.adopt(node, test);
    tree_.adopt(node, body);
    if (orelse) {
      tree_.adopt(node, *orelse);
    }
    return node;
  }

  NodeId parse_for(std::size_t begin, bool is_async) {
    expect_kw("for");
    NodeId target = parse_exprlist();
    set_ctx(target, ExprCtx::Store);
    expect_kw("in");
    NodeId iter = parse_testlist();
    NodeId body = parse_suite("body");
    std::optional<NodeId> orelse;
    if (accept_kw("else")) {
      orelse = parse_suite("else");
    }
    NodeId node = make(NodeKind::For, begin, end_of(orelse ? *orelse : body));
    if (is_async) {
      tree_[node].flags |= node_flags::kAsync;
    }
    tree_.adopt(node, target);
    tree_.adopt(node, iter);
    tree_.adopt(node, body);
    if (orelse) {
      tree_.adopt(node, *orelse);
    }
    return node;
  }

  NodeId parse_try() {
    std::size_t begin = cur().span.begin;
    advance();
    NodeId body = parse_suite("body");
    std::vector<NodeId> handlers;
    while (at_kw("except")) {
      std::size_t hbegin = cur().span.begin;
      advance();
      std::optional<NodeId> type;
      std::string as_name;
      if (!at_op(":")) {
        type = parse_test();
        if (accept_kw("as")) {
          as_name = expect_name();
        }
      }
      NodeId hbody = parse_suite("body");
      NodeId h = make(NodeKind::ExceptHandler, hbegin, end_of(hbody));
      tree_[h].name = as_name;
      if (type) {
        tree_.adopt(h, *type);
      }
      tree_.adopt(h, hbody);
      handlers.push_back(h);
    }
    std::optional<NodeId> orelse;
    std::optional<NodeId> finally;
    if (!handlers.empty() && accept_kw("else")) {
      orelse = parse_suite("else");
    }
    if (accept_kw("finally")) {
      finally = parse_suite("finally");
    }
    if (handlers.empty() && !finally) {
      fail("expected 'except' or 'finally' block");
    }
    std::size_t end = finally    ? end_of(*finally)
                      : orelse   ? end_of(*orelse)
                                 : end_of(handlers.back());
    NodeId node = make(NodeKind::Try, begin, end);
    tree_.adopt(node, body);
    for (NodeId h : handlers) {
      tree_.adopt(node, h);
    }
    if (orelse) {
      tree_.adopt(node, *orelse);
    }
    if (finally) {
      tree_.adopt(node, *finally);
    }
    return node;
  }

  NodeId parse_with(std::size_t begin, bool is_async) {
    expect_kw("with");
    std::vector<NodeId> items;
    do {
      NodeId e = parse_test();
      NodeId item = make(NodeKind::WithItem, begin_of(e), end_of(e));
      tree_.adopt(item, e);
      if (accept_kw("as")) {
        NodeId target = parse_bitor();
        set_ctx(target, ExprCtx::Store);
        tree_.adopt(item, target);
        set_end(item, end_of(target));
      }
      items.push_back(item);
    } while (accept_op(","));
    NodeId body = parse_suite("body");
    NodeId node = make(NodeKind::With, begin, end_of(body));
    if (is_async) {
      tree_[node].flags |= node_flags::kAsync;
    }
    for (NodeId i : items) {
      tree_.adopt(node, i);
    }
    tree_.adopt(node, body);
    return node;
  }

  NodeId parse_small_statement() {
    std::size_t begin = cur().span.begin;
    if (accept_kw("pass")) {
      return make(NodeKind::Pass, begin, last_end_);
    }
    if (accept_kw("break")) {
      return make(NodeKind::Break, begin, last_end_);
    }
    if (accept_kw("continue")) {
      return make(NodeKind::Continue, begin, last_end_);
    }
    if (accept_kw("return")) {
      NodeId node = make(NodeKind::Return, begin, last_end_);
      if (at_expr_start()) {
        NodeId v = parse_testlist_star_expr();
        tree_.adopt(node, v);
        set_end(node, end_of(v));
      }
      return node;
    }
    if (accept_kw("raise")) {
      NodeId node = make(NodeKind::Raise, begin, last_end_);
      if (at_expr_start()) {
        NodeId exc = parse_test();
        tree_.adopt(node, exc);
        set_end(node, end_of(exc));
        if (accept_kw("from")) {
          NodeId cause = parse_test();
          tree_.adopt(node, cause);
          set_end(node, end_of(cause));
        }
      }
      return node;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      NodeKind kind = at_kw("global") ? NodeKind::Global : NodeKind::Nonlocal;
      advance();
      NodeId node = make(kind, begin, begin);
      do {
        std::size_t nbegin = cur().span.begin;
        std::string name = expect_name();
        NodeId n = make(NodeKind::Name, nbegin, last_end_);
        tree_[n].name = std::move(name);
        tree_.adopt(node, n);
      } while (accept_op(","));
      set_end(node, last_end_);
      return node;
    }
    if (accept_kw("del")) {
      NodeId node = make(NodeKind::Delete, begin, begin);
      do {
        if (cur().kind == TokenKind::Newline || at_op(";")) {
          break;
        }
        NodeId t = parse_bitor();
        set_ctx(t, ExprCtx::Del);
        tree_.adopt(node, t);
      } while (accept_op(","));
      set_end(node, last_end_);
      return node;
    }
    if (accept_kw("assert")) {
      NodeId node = make(NodeKind::Assert, begin, begin);
      NodeId test = parse_test();
      tree_.adopt(node, test);
      if (accept_op(",")) {
        tree_.adopt(node, parse_test());
      }
      set_end(node, last_end_);
      return node;
    }
    if (accept_kw("import")) {
      NodeId node = make(NodeKind::Import, begin, begin);
      do {
        tree_.adopt(node, parse_import_alias(true));
      } while (accept_op(","));
      set_end(node, last_end_);
      return node;
    }
    if (accept_kw("from")) {
      NodeId node = make(NodeKind::ImportFrom, begin, begin);
      std::string dots;
      while (at_op(".") || at_op("...")) {
        dots += cur_text();
        advance();
      }
      std::string module;
      if (!at_kw("import")) {
        module = parse_dotted_name();
      }
      tree_[node].name = module;
      tree_[node].op = dots;
      expect_kw("import");
      if (accept_op("*")) {
        NodeId a = make(NodeKind::ImportAlias, last_end_ - 1, last_end_);
        tree_[a].name = "*";
        tree_.adopt(node, a);
      } else {
        bool paren = accept_op("(");
        do {
          if (paren && at_op(")")) {
            break;
          }
          tree_.adopt(node, parse_import_alias(false));
        } while (accept_op(","));
        if (paren) {
          expect_op(")");
        }
      }
      set_end(node, last_end_);
      return node;
    }
    return parse_expression_statement();
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (at_op(".")) {
      advance();
      name += ".";
      name += expect_name();
    }
    return name;
  }

  NodeId parse_import_alias(bool dotted) {
    std::size_t begin = cur().span.begin;
    std::string name = dotted ? parse_dotted_name() : expect_name();
    NodeId a = make(NodeKind::ImportAlias, begin, last_end_);
    tree_[a].name = std::move(name);
    if (accept_kw("as")) {
      tree_[a].alias = expect_name();
      set_end(a, last_end_);
    }
    return a;
  }

  NodeId parse_expression_statement() {
    std::size_t begin = cur().span.begin;
    NodeId first = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
    if (at_op("=")) {
      std::vector<NodeId> parts{first};
      while (accept_op("=")) {
        parts.push_back(at_kw("yield") ? parse_yield() : parse_testlist_star_expr());
      }
      NodeId node = make(NodeKind::Assign, begin, end_of(parts.back()));
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        set_ctx(parts[i], ExprCtx::Store);
      }
      for (NodeId p : parts) {
        tree_.adopt(node, p);
      }
      return node;
    }
    if (cur().kind == TokenKind::Op) {
      for (auto op : kAugOps) {
        if (cur_text() == op) {
          advance();
          NodeId value = at_kw("yield") ? parse_yield() : parse_testlist();
          check_single_target(first);
          set_ctx(first, ExprCtx::Store);
          NodeId node = make(NodeKind::AugAssign, begin, end_of(value));
          tree_[node].op = std::string(op.substr(0, op.size() - 1));
          tree_.adopt(node, first);
          tree_.adopt(node, value);
          return node;
        }
      }
    }
    if (accept_op(":")) {
      check_single_target(first);
      set_ctx(first, ExprCtx::Store);
      NodeId e = parse_test();
      NodeId ann = make(NodeKind::Annotation, begin_of(e), end_of(e));
      tree_.adopt(ann, e);
      NodeId node = make(NodeKind::AnnAssign, begin, end_of(ann));
      tree_.adopt(node, first);
      tree_.adopt(node, ann);
      if (accept_op("=")) {
        NodeId value = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
        tree_.adopt(node, value);
        set_end(node, end_of(value));
      }
      return node;
    }
    NodeId node = make(NodeKind::ExprStmt, begin, end_of(first));
    tree_.adopt(node, first);
    return node;
  }

  void check_single_target(NodeId id) {
    auto k = tree_[id].kind;
    if (k != NodeKind::Name && k != NodeKind::Attribute && k != NodeKind::Subscript) {
      throw SyntaxError(src_.path(), tree_[id].pos,
                        "illegal target for annotation or augmented assignment");
    }
  }

  void set_ctx(NodeId id, ExprCtx ctx) {
    auto &n = tree_[id];
    switch (n.kind) {
    case NodeKind::Name:
    case NodeKind::Attribute:
    case NodeKind::Subscript:
      n.ctx = ctx;
      break;
    case NodeKind::Tuple:
    case NodeKind::List:
    case NodeKind::Starred: {
      n.ctx = ctx;
      auto kids = n.children;
      for (NodeId c : kids) {
        set_ctx(c, ctx);
      }
      break;
    }
    default:
      throw SyntaxError(src_.path(), n.pos,
                        "cannot assign to " + std::string(kind_name(n.kind)));
    }
  }

  // ---- expressions ---------------------------------------------------------

  NodeId parse_yield() {
    std::size_t begin = cur().span.begin;
    expect_kw("yield");
    if (accept_kw("from")) {
      NodeId v = parse_test();
      NodeId node = make(NodeKind::YieldFrom, begin, end_of(v));
      tree_.adopt(node, v);
      return node;
    }
    NodeId node = make(NodeKind::Yield, begin, last_end_);
    if (at_expr_start()) {
      NodeId v = parse_testlist_star_expr();
      tree_.adopt(node, v);
      set_end(node, end_of(v));
    }
    return node;
  }

  NodeId parse_star_or_test() {
    if (at_op("*")) {
      std::size_t begin = cur().span.begin;
      advance();
      NodeId v = parse_bitor();
      NodeId node = make(NodeKind::Starred, begin, end_of(v));
      tree_[node].op = "*";
      tree_.adopt(node, v);
      return node;
    }
    return parse_namedexpr_test();
  }

  // Comma-separated list; produces a Tuple when a comma is present.
  template <typename ItemFn> NodeId parse_list_of(ItemFn item) {
    NodeId first = item();
    if (!at_op(",")) {
      return first;
    }
    std::vector<NodeId> elts{first};
    std::size_t end = end_of(first);
    while (accept_op(",")) {
      end = last_end_;
      if (!at_expr_start()) {
        break;
      }
      NodeId e = item();
      elts.push_back(e);
      end = end_of(e);
    }
    NodeId tuple = make(NodeKind::Tuple, begin_of(first), end);
    for (NodeId e : elts) {
      tree_.adopt(tuple, e);
    }
    return tuple;
  }

  NodeId parse_testlist_star_expr() {
    return parse_list_of([this] { return parse_star_or_test(); });
  }
  NodeId parse_testlist() {
    return parse_list_of([this] { return parse_test(); });
  }
  NodeId parse_exprlist() {
    return parse_list_of([this] {
      if (at_op("*")) {
        return parse_star_or_test();
      }
      return parse_bitor();
    });
  }

  NodeId parse_namedexpr_test() {
    NodeId t = parse_test();
    if (at_op(":=")) {
      if (tree_[t].kind != NodeKind::Name) {
        fail("cannot use assignment expressions with this target");
      }
      advance();
      set_ctx(t, ExprCtx::Store);
      NodeId v = parse_test();
      NodeId node = make(NodeKind::NamedExpr, begin_of(t), end_of(v));
      tree_.adopt(node, t);
      tree_.adopt(node, v);
      return node;
    }
    return t;
  }

  NodeId parse_test() {
    if (at_kw("lambda")) {
      return parse_lambda(false);
    }
    NodeId body = parse_or();
    if (at_kw("if")) {
      advance();
      NodeId test = parse_or();
      expect_kw("else");
      NodeId orelse = parse_test();
      NodeId node = make(NodeKind::IfExp, begin_of(body), end_of(orelse));
      tree_.adopt(node, body);
      tree_.adopt(node, test);
      tree_.adopt(node, orelse);
      return node;
    }
    return body;
  }

  NodeId parse_test_nocond() {
    if (at_kw("lambda")) {
      return parse_lambda(true);
    }
    return parse_or();
  }

  NodeId parse_lambda(bool nocond) {
    std::size_t begin = cur().span.begin;
    advance();
    NodeId params = make(NodeKind::Parameters, cur().span.begin, cur().span.begin);
    parse_parameters(params, ":", false);
    set_end(params, last_end_);
    if (tree_[params].children.empty()) {
      tree_[params].span = {begin + 6, begin + 6};
    }
    expect_op(":");
    NodeId body = nocond ? parse_test_nocond() : parse_test();
    NodeId node = make(NodeKind::Lambda, begin, end_of(body));
    tree_.adopt(node, params);
    tree_.adopt(node, body);
    return node;
  }

  NodeId parse_or() {
    NodeId first = parse_and();
    if (!at_kw("or")) {
      return first;
    }
    std::vector<NodeId> values{first};
    while (accept_kw("or")) {
      values.push_back(parse_and());
    }
    return make_boolop("or", values);
  }

  NodeId parse_and() {
    NodeId first = parse_not();
    if (!at_kw("and")) {
      return first;
    }
    std::vector<NodeId> values{first};
    while (accept_kw("and")) {
      values.push_back(parse_not());
    }
    return make_boolop("and", values);
  }

  NodeId make_boolop(std::string_view op, const std::vector<NodeId> &values) {
    NodeId node = make(NodeKind::BoolOp, begin_of(values.front()), end_of(values.back()));
    tree_[node].op = std::string(op);
    for (NodeId v : values) {
      tree_.adopt(node, v);
    }
    return node;
  }

  NodeId parse_not() {
    if (at_kw("not")) {
      std::size_t begin = cur().span.begin;
      advance();
      NodeId operand = parse_not();
      NodeId node = make(NodeKind::UnaryOp, begin, end_of(operand));
      tree_[node].op = "not";
      tree_.adopt(node, operand);
      return node;
    }
    return parse_comparison();
  }

  std::optional<std::string> comparison_op() {
    if (cur().kind == TokenKind::Op) {
      auto s = cur_text();
      if (s == "<" || s == ">" || s == "==" || s == ">=" || s == "<=" || s == "!=") {
        advance();
        return std::string(s);
      }
      return std::nullopt;
    }
    if (at_kw("in")) {
      advance();
      return "in";
    }
    if (at_kw("not") && peek().kind == TokenKind::Name && tok_text(peek()) == "in") {
      advance();
      advance();
      return "not in";
    }
    if (at_kw("is")) {
      advance();
      if (accept_kw("not")) {
        return "is not";
      }
      return "is";
    }
    return std::nullopt;
  }

  NodeId parse_comparison() {
    NodeId left = parse_bitor();
    std::vector<std::string> ops;
    std::vector<NodeId> comparators;
    while (auto op = comparison_op()) {
      ops.push_back(*op);
      comparators.push_back(parse_bitor());
    }
    if (ops.empty()) {
      return left;
    }
    NodeId node = make(NodeKind::Compare, begin_of(left), end_of(comparators.back()));
    tree_[node].ops = std::move(ops);
    tree_.adopt(node, left);
    for (NodeId c : comparators) {
      tree_.adopt(node, c);
    }
    return node;
  }

  template <typename Next>
  NodeId parse_binary(std::initializer_list<std::string_view> ops, Next next) {
    NodeId left = next();
    while (cur().kind == TokenKind::Op) {
      auto s = cur_text();
      bool matched = false;
      for (auto op : ops) {
        if (s == op) {
          matched = true;
          break;
        }
      }
      if (!matched) {
        break;
      }
      std::string op(s);
      advance();
      NodeId right = next();
      NodeId node = make(NodeKind::BinOp, begin_of(left), end_of(right));
      tree_[node].op = std::move(op);
      tree_.adopt(node, left);
      tree_.adopt(node, right);
      left = node;
    }
    return left;
  }

  NodeId parse_bitor() {
    return parse_binary({"|"}, [this] { return parse_xor(); });
  }
  NodeId parse_xor() {
    return parse_binary({"^"}, [this] { return parse_bitand(); });
  }
  NodeId parse_bitand() {
    return parse_binary({"&"}, [this] { return parse_shift(); });
  }
  NodeId parse_shift() {
    return parse_binary({"<<", ">>"}, [this] { return parse_arith(); });
  }
  NodeId parse_arith() {
    return parse_binary({"+", "-"}, [this] { return parse_term(); });
  }
  NodeId parse_term() {
    return parse_binary({"*", "@", "/", "%", "//"}, [this] { return parse_factor(); });
  }

  NodeId parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      std::size_t begin = cur().span.begin;
      std::string op(cur_text());
      advance();
      NodeId operand = parse_factor();
      NodeId node = make(NodeKind::UnaryOp, begin, end_of(operand));
      tree_[node].op = std::move(op);
      tree_.adopt(node, operand);
      return node;
    }
    return parse_power();
  }

  NodeId parse_power() {
    NodeId base = parse_atom_expr();
    if (at_op("**")) {
      advance();
      NodeId exp = parse_factor();
      NodeId node = make(NodeKind::BinOp, begin_of(base), end_of(exp));
      tree_[node].op = "**";
      tree_.adopt(node, base);
      tree_.adopt(node, exp);
      return node;
    }
    return base;
  }

  NodeId parse_atom_expr() {
    if (at_kw("await")) {
      std::size_t begin = cur().span.begin;
      advance();
      NodeId v = parse_atom_expr();
      NodeId node = make(NodeKind::Await, begin, end_of(v));
      tree_.adopt(node, v);
      return node;
    }
    NodeId node = parse_atom();
    while (true) {
      if (at_op("(")) {
        advance();
        NodeId call = make(NodeKind::Call, begin_of(node), begin_of(node));
        tree_.adopt(call, node);
        parse_call_arguments(call);
        expect_op(")");
        set_end(call, last_end_);
        node = call;
      } else if (at_op("[")) {
        advance();
        NodeId slice = parse_subscript_list();
        expect_op("]");
        NodeId sub = make(NodeKind::Subscript, begin_of(node), last_end_);
        tree_.adopt(sub, node);
        tree_.adopt(sub, slice);
        node = sub;
      } else if (at_op(".")) {
        advance();
        std::string attr = expect_name();
        NodeId a = make(NodeKind::Attribute, begin_of(node), last_end_);
        tree_[a].name = std::move(attr);
        tree_.adopt(a, node);
        node = a;
      } else {
        return node;
      }
    }
  }

  void parse_call_arguments(NodeId call) {
    while (!at_op(")")) {
      std::size_t begin = cur().span.begin;
      NodeId arg;
      if (at_op("*") || at_op("**")) {
        std::string op(cur_text());
        advance();
        NodeId v = parse_test();
        arg = make(NodeKind::Starred, begin, end_of(v));
        tree_[arg].op = op;
        tree_.adopt(arg, v);
      } else if (cur().kind == TokenKind::Name && peek().kind == TokenKind::Op &&
                 tok_text(peek()) == "=") {
        std::string name = expect_name();
        advance();
        NodeId v = parse_test();
        arg = make(NodeKind::Keyword, begin, end_of(v));
        tree_[arg].name = std::move(name);
        tree_.adopt(arg, v);
      } else {
        arg = parse_namedexpr_test();
        if (at_kw("for") || at_kw("async")) {
          arg = parse_comprehension_tail(NodeKind::GeneratorExp, begin, arg, std::nullopt);
        }
      }
      tree_.adopt(call, arg);
      if (!accept_op(",")) {
        break;
      }
    }
  }

  NodeId parse_subscript_list() {
    NodeId first = parse_subscript();
    if (!at_op(",")) {
      return first;
    }
    std::vector<NodeId> elts{first};
    std::size_t end = end_of(first);
    while (accept_op(",")) {
      end = last_end_;
      if (at_op("]")) {
        break;
      }
      NodeId e = parse_subscript();
      elts.push_back(e);
      end = end_of(e);
    }
    NodeId tuple = make(NodeKind::Tuple, begin_of(first), end);
    for (NodeId e : elts) {
      tree_.adopt(tuple, e);
    }
    return tuple;
  }

  NodeId parse_subscript() {
    std::size_t begin = cur().span.begin;
    std::optional<NodeId> lower;
    if (!at_op(":")) {
      NodeId e = parse_star_or_test();
      if (!at_op(":")) {
        return e;
      }
      lower = e;
    }
    expect_op(":");
    NodeId slice = make(NodeKind::Slice, begin, last_end_);
    if (lower) {
      tree_.adopt(slice, *lower);
      tree_[slice].flags |= node_flags::kSliceLower;
    }
    if (!at_op("]") && !at_op(",") && !at_op(":")) {
      NodeId upper = parse_test();
      tree_.adopt(slice, upper);
      tree_[slice].flags |= node_flags::kSliceUpper;
      set_end(slice, end_of(upper));
    }
    if (accept_op(":")) {
      set_end(slice, last_end_);
      if (!at_op("]") && !at_op(",")) {
        NodeId step = parse_test();
        tree_.adopt(slice, step);
        tree_[slice].flags |= node_flags::kSliceStep;
        set_end(slice, end_of(step));
      }
    }
    return slice;
  }

  NodeId parse_comprehension_tail(NodeKind kind, std::size_t begin, NodeId elt,
                                  std::optional<NodeId> value) {
    std::vector<NodeId> generators;
    while (at_kw("for") || at_kw("async")) {
      std::size_t gbegin = cur().span.begin;
      bool is_async = accept_kw("async");
      expect_kw("for");
      NodeId target = parse_exprlist();
      set_ctx(target, ExprCtx::Store);
      expect_kw("in");
      NodeId iter = parse_or();
      NodeId gen = make(NodeKind::Comprehension, gbegin, end_of(iter));
      if (is_async) {
        tree_[gen].flags |= node_flags::kAsync;
      }
      tree_.adopt(gen, target);
      tree_.adopt(gen, iter);
      while (at_kw("if")) {
        advance();
        NodeId cond = parse_test_nocond();
        tree_.adopt(gen, cond);
        set_end(gen, end_of(cond));
      }
      generators.push_back(gen);
    }
    NodeId node = make(kind, begin, end_of(generators.back()));
    tree_.adopt(node, elt);
    if (value) {
      tree_.adopt(node, *value);
    }
    for (NodeId g : generators) {
      tree_.adopt(node, g);
    }
    return node;
  }

  void wrap_parens(NodeId id, std::size_t open, std::size_t close) {
    tree_[id].span = {open, close};
    tree_[id].pos = src_.position(open);
    tree_[id].flags |= node_flags::kParenthesized;
  }

  NodeId parse_atom() {
    const Token &t = cur();
    std::size_t begin = t.span.begin;
    switch (t.kind) {
    case TokenKind::Number: {
      advance();
      return make(NodeKind::Constant, begin, last_end_);
    }
    case TokenKind::String: {
      bool fstr = false;
      while (cur().kind == TokenKind::String) {
        fstr |= cur().fstring;
        advance();
      }
      NodeId node = make(NodeKind::Str, begin, last_end_);
      if (fstr) {
        tree_[node].flags |= node_flags::kFString;
      }
      return node;
    }
    case TokenKind::Name: {
      auto s = cur_text();
      if (s == "None" || s == "True" || s == "False") {
        advance();
        return make(NodeKind::Constant, begin, last_end_);
      }
      if (is_keyword(s)) {
        fail("invalid syntax");
      }
      advance();
      NodeId node = make(NodeKind::Name, begin, last_end_);
      tree_[node].name = std::string(s);
      return node;
    }
    case TokenKind::Op:
      break;
    default:
      fail("invalid syntax");
    }

    if (accept_op("...")) {
      return make(NodeKind::Constant, begin, last_end_);
    }
    if (accept_op("(")) {
      if (accept_op(")")) {
        NodeId node = make(NodeKind::Tuple, begin, last_end_);
        tree_[node].flags |= node_flags::kParenthesized;
        return node;
      }
      if (at_kw("yield")) {
        NodeId y = parse_yield();
        expect_op(")");
        wrap_parens(y, begin, last_end_);
        return y;
      }
      NodeId first = parse_star_or_test();
      if (at_kw("for") || at_kw("async")) {
        NodeId gen = parse_comprehension_tail(NodeKind::GeneratorExp, begin, first,
                                              std::nullopt);
        expect_op(")");
        wrap_parens(gen, begin, last_end_);
        return gen;
      }
      if (at_op(",")) {
        std::vector<NodeId> elts{first};
        while (accept_op(",")) {
          if (at_op(")")) {
            break;
          }
          elts.push_back(parse_star_or_test());
        }
        expect_op(")");
        NodeId tuple = make(NodeKind::Tuple, begin, last_end_);
        tree_[tuple].flags |= node_flags::kParenthesized;
        for (NodeId e : elts) {
          tree_.adopt(tuple, e);
        }
        return tuple;
      }
      expect_op(")");
      wrap_parens(first, begin, last_end_);
      return first;
    }
    if (accept_op("[")) {
      if (accept_op("]")) {
        return make(NodeKind::List, begin, last_end_);
      }
      NodeId first = parse_star_or_test();
      if (at_kw("for") || at_kw("async")) {
        NodeId comp =
            parse_comprehension_tail(NodeKind::ListComp, begin, first, std::nullopt);
        expect_op("]");
        set_end(comp, last_end_);
        return comp;
      }
      std::vector<NodeId> elts{first};
      while (accept_op(",")) {
        if (at_op("]")) {
          break;
        }
        elts.push_back(parse_star_or_test());
      }
      expect_op("]");
      NodeId list = make(NodeKind::List, begin, last_end_);
      for (NodeId e : elts) {
        tree_.adopt(list, e);
      }
      return list;
    }
    if (accept_op("{")) {
      if (accept_op("}")) {
        return make(NodeKind::Dict, begin, last_end_);
      }
      return parse_dict_or_set(begin);
    }
    fail("invalid syntax");
  }

  NodeId parse_dict_entry(std::vector<NodeId> &items) {
    if (at_op("**")) {
      std::size_t begin = cur().span.begin;
      advance();
      NodeId v = parse_bitor();
      NodeId u = make(NodeKind::DictUnpack, begin, end_of(v));
      tree_.adopt(u, v);
      items.push_back(u);
      return u;
    }
    NodeId key = parse_test();
    expect_op(":");
    NodeId value = parse_test();
    items.push_back(key);
    items.push_back(value);
    return key;
  }

  NodeId parse_dict_or_set(std::size_t begin) {
    std::vector<NodeId> items;
    bool is_dict = false;
    if (at_op("**")) {
      is_dict = true;
      parse_dict_entry(items);
    } else {
      NodeId first = parse_star_or_test();
      if (accept_op(":")) {
        is_dict = true;
        NodeId value = parse_test();
        if (at_kw("for") || at_kw("async")) {
          NodeId comp = parse_comprehension_tail(NodeKind::DictComp, begin, first, value);
          expect_op("}");
          set_end(comp, last_end_);
          return comp;
        }
        items.push_back(first);
        items.push_back(value);
      } else {
        if (at_kw("for") || at_kw("async")) {
          NodeId comp =
              parse_comprehension_tail(NodeKind::SetComp, begin, first, std::nullopt);
          expect_op("}");
          set_end(comp, last_end_);
          return comp;
        }
        items.push_back(first);
      }
    }
    while (accept_op(",")) {
      if (at_op("}")) {
        break;
      }
      if (is_dict) {
        parse_dict_entry(items);
      } else {
        items.push_back(parse_star_or_test());
      }
    }
    expect_op("}");
    NodeId node = make(is_dict ? NodeKind::Dict : NodeKind::Set, begin, last_end_);
    for (NodeId i : items) {
      tree_.adopt(node, i);
    }
    return node;
  }

  const SourceModule &src_;
  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t idx_ = 0;
  std::size_t last_end_ = 0;
  Tree tree_;
};

} // namespace

Tree parse_module(const SourceModule &source) { return Parser(source).run(); }

} // namespace graphmend
