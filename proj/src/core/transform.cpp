#include "graphmend/transform.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <variant>

namespace graphmend {

namespace {

// Reasons are part of the report format; keep the wording stable.
constexpr const char *kImpure = "impure branch";
constexpr const char *kUnsupportedStmt = "unsupported statement in branch";
constexpr const char *kNonSimpleTarget = "non-simple assignment target";
constexpr const char *kNoReachingDef = "no reaching definition";
constexpr const char *kUnsupportedSyntax = "unsupported syntax";
constexpr const char *kNestedIf = "non-predicable nested if";
constexpr const char *kUnfixableCond = "unfixable condition";
constexpr const char *kNoAssignments = "no assignments";
constexpr const char *kElifAlone = "elif arm of an unfixed if";
constexpr const char *kNoTorch = "torch module not bound by name";
constexpr const char *kValueUsed = "value used";
constexpr const char *kNested = "nested in control flow";
constexpr const char *kCallForm = "unsupported call form";
constexpr const char *kNoReturn = "no return path";

bool within(const Tree &tree, NodeId inner, NodeId outer) {
  return tree[outer].span.contains(tree[inner].span);
}

std::string_view leading_ws(const SourceModule &src, std::size_t offset) {
  std::size_t ls = src.line_start(offset);
  std::string_view line = src.slice({ls, offset});
  auto end = line.find_first_not_of(" \t");
  return line.substr(0, end == std::string_view::npos ? line.size() : end);
}

/// True when only whitespace precedes `offset` on its line.
bool starts_line(const SourceModule &src, std::size_t offset) {
  return leading_ws(src, offset).size() == offset - src.line_start(offset);
}

/// Source of `expr` with Name loads renamed per `env`.
std::string renamed(const UniIR &ir, NodeId expr, const std::map<std::string, std::string> &env) {
  const Tree &tree = ir.tree();
  const ByteRange span = tree[expr].span;
  std::vector<SpanEdit> edits;
  tree.walk(expr, [&](NodeId id) {
    const AstNode &n = tree[id];
    if (n.kind == NodeKind::Name && n.ctx == ExprCtx::Load) {
      auto it = env.find(n.name);
      if (it != env.end() && it->second != n.name) {
        edits.push_back({{n.span.begin - span.begin, n.span.end - span.begin}, it->second});
      }
    }
    return true;
  });
  return emit_source(ir.source().slice(span), edits);
}

/// Fresh identifiers, numbered per function and stem, checked against every
/// binding in the file and against names already handed out to the same
/// function or to a function nested with it.
class NameAllocator {
public:
  NameAllocator(const Tree &tree, const SymbolTable &st) : tree_(tree), st_(st) {}

  std::string fresh(NodeId function, const std::string &stem) {
    int &counter = counters_[{function, stem}];
    while (true) {
      std::string name = stem + std::to_string(counter++);
      if (!st_.any_binding(name) && !st_.visible(0, name) && !taken(function, name)) {
        used_[function].insert(name);
        return name;
      }
    }
  }

private:
  [[nodiscard]] bool nested(NodeId inner, NodeId outer) const {
    for (auto f = tree_.enclosing(inner, NodeKind::FunctionDef); f;
         f = tree_.enclosing(*f, NodeKind::FunctionDef)) {
      if (*f == outer) {
        return true;
      }
    }
    return false;
  }

  [[nodiscard]] bool taken(NodeId function, const std::string &name) const {
    for (const auto &[fn, names] : used_) {
      bool related = fn == function || nested(fn, function) || nested(function, fn);
      if (related && names.contains(name)) {
        return true;
      }
    }
    return false;
  }

  const Tree &tree_;
  const SymbolTable &st_;
  std::map<std::pair<NodeId, std::string>, int> counters_;
  std::map<NodeId, std::set<std::string>> used_;
};

struct Gate {
  bool ok = true;
  std::string reason;
  static Gate fail(std::string r) { return {false, std::move(r)}; }
};

class Planner {
public:
  Planner(const UniIR &ir, const Detection &det, const AnalysisConfig &config)
      : ir_(ir), tree_(ir.tree()), det_(det), config_(config), names_(ir.tree(), ir.symtab()) {
    for (const auto &t : det.tags) {
      if (t.kind == BreakKind::DynCtrlFl && t.fixable &&
          tree_[t.site].kind == NodeKind::If) {
        dyn_ifs_.insert(t.site);
      }
    }
    torch_name_ = find_torch_name();
  }

  TransformPlan run() {
    TransformPlan plan;
    plan.file = ir_.source().path();
    std::set<NodeId> planned;
    std::vector<std::pair<std::size_t, Rewrite>> ordered;
    for (const auto &tag : det_.tags) {
      if (!tag.fixable || planned.contains(tag.site)) {
        continue;
      }
      if (tag.kind == BreakKind::DynCtrlFl) {
        std::vector<PredicationRewrite> group;
        Gate g = plan_predication(tag, group);
        if (!g.ok) {
          plan.skipped.push_back({tag, g.reason});
          continue;
        }
        for (auto &r : group) {
          planned.insert(r.if_node);
          ordered.emplace_back(tree_[tag.site].span.begin, std::move(r));
        }
      } else if (tag.kind == BreakKind::LoggerPrint) {
        DeferralRewrite r;
        Gate g = plan_deferral(tag, r);
        if (!g.ok) {
          plan.skipped.push_back({tag, g.reason});
          continue;
        }
        planned.insert(tag.site);
        ordered.emplace_back(tree_[tag.site].span.begin, std::move(r));
      }
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    // One hoist temporary per return, shared by every deferral replayed there.
    std::map<NodeId, std::string> ret_names;
    for (auto &[pos, r] : ordered) {
      if (auto *d = std::get_if<DeferralRewrite>(&r)) {
        for (NodeId ret : d->epilogue_returns) {
          if (tree_[ret].children.empty()) {
            continue;
          }
          if (!ret_names.contains(ret)) {
            ret_names[ret] = names_.fresh(d->function, "__gm_ret_");
          }
          d->ret_names[ret] = ret_names[ret];
        }
      }
      plan.rewrites.push_back(std::move(r));
    }
    return plan;
  }

private:
  std::optional<std::string> find_torch_name() const {
    for (const auto &[name, sym] : ir_.symtab().scope(0).symbols) {
      if (ir_.symtab().symbol(sym).import_path == "torch") {
        return name;
      }
    }
    return std::nullopt;
  }

  const TaintState *taint_of(NodeId fn) const {
    auto it = det_.taint.find(fn);
    return it == det_.taint.end() ? nullptr : &it->second;
  }

  const DefiniteAssignment &definite(NodeId fn) {
    auto it = da_.find(fn);
    if (it == da_.end()) {
      it = da_.emplace(fn, compute_definite_assignment(ir_, fn)).first;
    }
    return it->second;
  }

  /// Is there a tag other than a predicable if inside `node`'s span?
  bool has_foreign_tag(NodeId node) const {
    return std::any_of(det_.tags.begin(), det_.tags.end(), [&](const GraphBreakTag &t) {
      return within(tree_, t.site, node) && !dyn_ifs_.contains(t.site);
    });
  }

  // --- predication gate ---------------------------------------------------

  Gate check_rhs(NodeId expr, const SymbolSet &tainted) const {
    Gate g;
    tree_.walk(expr, [&](NodeId id) {
      if (!g.ok) {
        return false;
      }
      const AstNode &n = tree_[id];
      switch (n.kind) {
      case NodeKind::Name:
      case NodeKind::Constant:
      case NodeKind::Str:
      case NodeKind::Attribute:
      case NodeKind::BinOp:
      case NodeKind::UnaryOp:
      case NodeKind::BoolOp:
      case NodeKind::Compare:
      case NodeKind::Subscript:
      case NodeKind::Slice:
      case NodeKind::Tuple:
      case NodeKind::List:
      case NodeKind::Keyword:
        return true;
      case NodeKind::Call: {
        if (is_logger_print_call(ir_, id)) {
          g = Gate::fail(kImpure);
          return false;
        }
        NodeId func = n.children.at(0);
        const AstNode &f = tree_[func];
        bool torch_fn = rooted_at_torch(ir_, func);
        bool pure_method = f.kind == NodeKind::Attribute && config_.pure_ops.contains(f.name) &&
                           expr_tainted(ir_, config_, tainted, f.children.at(0));
        if (!torch_fn && !pure_method) {
          g = Gate::fail(kImpure);
          return false;
        }
        return true;
      }
      default:
        g = Gate::fail(kUnsupportedSyntax);
        return false;
      }
    });
    return g;
  }

  struct BranchInfo {
    std::vector<std::string> assigned; // first-assignment order
    std::map<std::string, std::string> last_rhs;
  };

  static void note_assign(BranchInfo &b, const std::string &name, std::string rhs) {
    if (std::find(b.assigned.begin(), b.assigned.end(), name) == b.assigned.end()) {
      b.assigned.push_back(name);
    }
    b.last_rhs[name] = std::move(rhs);
  }

  Gate check_branch(NodeId fn, const std::vector<NodeId> &stmts, const SymbolSet &tainted,
                    BranchInfo &info, std::vector<PredicationRewrite> &group) {
    for (NodeId s : stmts) {
      const AstNode &n = tree_[s];
      switch (n.kind) {
      case NodeKind::Pass:
        break;
      case NodeKind::Assign: {
        if (n.children.size() != 2 || tree_[n.children[0]].kind != NodeKind::Name) {
          return Gate::fail(kNonSimpleTarget);
        }
        if (Gate g = check_rhs(n.children[1], tainted); !g.ok) {
          return g;
        }
        note_assign(info, tree_[n.children[0]].name,
                    std::string(ir_.source().slice(tree_[n.children[1]].span)));
        break;
      }
      case NodeKind::AugAssign: {
        if (tree_[n.children[0]].kind != NodeKind::Name) {
          return Gate::fail(kNonSimpleTarget);
        }
        if (Gate g = check_rhs(n.children[1], tainted); !g.ok) {
          return g;
        }
        const std::string &t = tree_[n.children[0]].name;
        note_assign(info, t,
                    t + " " + n.op + " (" +
                        std::string(ir_.source().slice(tree_[n.children[1]].span)) + ")");
        break;
      }
      case NodeKind::AnnAssign: {
        if (tree_[n.children[0]].kind != NodeKind::Name) {
          return Gate::fail(kNonSimpleTarget);
        }
        if (n.children.size() != 3) {
          return Gate::fail(kUnsupportedStmt);
        }
        if (Gate g = check_rhs(n.children[2], tainted); !g.ok) {
          return g;
        }
        note_assign(info, tree_[n.children[0]].name,
                    std::string(ir_.source().slice(tree_[n.children[2]].span)));
        break;
      }
      case NodeKind::If: {
        if (!dyn_ifs_.contains(s)) {
          return Gate::fail(kNestedIf);
        }
        std::vector<PredicationRewrite> inner;
        Gate g = check_if(fn, s, inner);
        if (!g.ok) {
          return Gate::fail(kNestedIf);
        }
        for (const auto &t : inner.back().targets) {
          note_assign(info, t, "torch.where(...)");
        }
        group.insert(group.end(), std::make_move_iterator(inner.begin()),
                     std::make_move_iterator(inner.end()));
        break;
      }
      case NodeKind::ExprStmt:
        return Gate::fail(kImpure);
      case NodeKind::Try:
      case NodeKind::With:
      case NodeKind::Raise:
      case NodeKind::Assert:
      case NodeKind::Delete:
      case NodeKind::Global:
      case NodeKind::Nonlocal:
        return Gate::fail(kUnsupportedSyntax);
      default:
        return Gate::fail(kUnsupportedStmt);
      }
    }
    return {};
  }

  /// Gates one if (and its nested ifs). On success appends the rewrites of
  /// the nested ifs followed by this one to `group` (innermost first).
  Gate check_if(NodeId fn, NodeId if_node, std::vector<PredicationRewrite> &group) {
    const FunctionCfg *cfg = ir_.cfg_of(fn);
    const TaintState *taint = taint_of(fn);
    auto idx = cfg ? cfg->index_of(if_node) : std::nullopt;
    if (!idx || taint == nullptr) {
      return Gate::fail(kUnsupportedStmt);
    }
    const SymbolSet &tainted = taint->in[*idx];
    NodeId test = *tree_.test(if_node);
    if (has_foreign_tag(test)) {
      return Gate::fail(kUnfixableCond);
    }
    bool bad_cond = false;
    tree_.walk(test, [&](NodeId id) {
      switch (tree_[id].kind) {
      case NodeKind::Lambda:
      case NodeKind::NamedExpr:
      case NodeKind::Yield:
      case NodeKind::YieldFrom:
      case NodeKind::Await:
      case NodeKind::ListComp:
      case NodeKind::SetComp:
      case NodeKind::DictComp:
      case NodeKind::GeneratorExp:
        bad_cond = true;
        return false;
      case NodeKind::Call:
        if (is_logger_print_call(ir_, id)) {
          bad_cond = true;
        }
        return !bad_cond;
      default:
        return true;
      }
    });
    if (bad_cond) {
      return Gate::fail(kUnsupportedSyntax);
    }

    std::vector<PredicationRewrite> nested;
    BranchInfo then_info;
    BranchInfo else_info;
    NodeId body = tree_[if_node].children.at(1);
    if (Gate g = check_branch(fn, tree_[body].children, tainted, then_info, nested); !g.ok) {
      return g;
    }
    if (auto orelse = tree_.orelse(if_node)) {
      std::vector<NodeId> stmts = tree_[*orelse].kind == NodeKind::If
                                      ? std::vector<NodeId>{*orelse}
                                      : tree_[*orelse].children;
      if (Gate g = check_branch(fn, stmts, tainted, else_info, nested); !g.ok) {
        return g;
      }
    }
    for (NodeId b : tree_[if_node].children) {
      if (b != test && has_foreign_tag(b)) {
        return Gate::fail(kImpure);
      }
    }

    PredicationRewrite r;
    r.if_node = if_node;
    r.function = fn;
    r.cond_src = std::string(ir_.source().slice(tree_[test].span));
    r.insertion_point = tree_[if_node].span.begin;
    r.range = tree_[if_node].span;
    for (const auto *info : {&then_info, &else_info}) {
      for (const auto &t : info->assigned) {
        if (std::find(r.targets.begin(), r.targets.end(), t) == r.targets.end()) {
          r.targets.push_back(t);
        }
      }
    }
    if (r.targets.empty()) {
      return Gate::fail(kNoAssignments);
    }
    const auto &da = definite(fn);
    auto scope = ir_.symtab().scope_owned_by(fn);
    for (const auto &t : r.targets) {
      bool in_then = then_info.last_rhs.contains(t);
      bool in_else = else_info.last_rhs.contains(t);
      r.then_exprs[t] = in_then ? then_info.last_rhs[t] : std::string(kPriorValue);
      r.else_exprs[t] = in_else ? else_info.last_rhs[t] : std::string(kPriorValue);
      if (in_then && in_else) {
        r.proof.push_back(t + ": assigned in both branches");
        continue;
      }
      auto sym = scope ? ir_.symtab().lookup(*scope, t) : std::nullopt;
      if (!sym || !da.assigned_before(*idx, *sym)) {
        return Gate::fail(kNoReachingDef);
      }
      r.proof.push_back(t + ": definitely assigned before line " +
                        std::to_string(tree_[if_node].pos.line));
    }
    group.insert(group.end(), std::make_move_iterator(nested.begin()),
                 std::make_move_iterator(nested.end()));
    group.push_back(std::move(r));
    return {};
  }

  Gate plan_predication(const GraphBreakTag &tag, std::vector<PredicationRewrite> &group) {
    NodeId if_node = tag.site;
    if (tree_[if_node].name == "elif") {
      return Gate::fail(kElifAlone);
    }
    if (!torch_name_) {
      return Gate::fail(kNoTorch);
    }
    if (auto scope = ir_.symtab().scope_owned_by(tag.function)) {
      auto sym = ir_.symtab().lookup(*scope, *torch_name_);
      if (!sym || ir_.symtab().symbol(*sym).import_path != "torch") {
        return Gate::fail(kNoTorch);
      }
    }
    if (Gate g = check_if(tag.function, if_node, group); !g.ok) {
      return g;
    }
    for (auto &r : group) {
      r.group_root = if_node;
    }
    generate(group);
    return {};
  }

  // --- predication codegen -----------------------------------------------

  PredicationRewrite &member(NodeId if_node) {
    for (auto &r : *current_group_) {
      if (r.if_node == if_node) {
        return r;
      }
    }
    throw std::logic_error("predication group is missing a nested if");
  }

  /// Emits the statements for `if_node` evaluated under `env`. Results are
  /// written to `result_prefix` names (nested) or to the targets (root).
  void emit_if(PredicationRewrite &root, NodeId if_node, std::map<std::string, std::string> &env,
               const std::string &result_prefix, std::vector<std::string> &lines) {
    NodeId fn = root.function;
    std::string pred = names_.fresh(fn, "__gm_pred_");
    member(if_node).pred_name = pred;
    lines.push_back(pred + " = " + renamed(ir_, *tree_.test(if_node), env));

    auto then_env = env;
    emit_branch(root, tree_[tree_[if_node].children.at(1)].children, then_env, "__gm_then_",
                lines);
    auto else_env = env;
    if (auto orelse = tree_.orelse(if_node)) {
      std::vector<NodeId> stmts = tree_[*orelse].kind == NodeKind::If
                                      ? std::vector<NodeId>{*orelse}
                                      : tree_[*orelse].children;
      emit_branch(root, stmts, else_env, "__gm_else_", lines);
    }

    const auto targets = member(if_node).targets;
    auto current = [&](const std::map<std::string, std::string> &e, const std::string &t) {
      auto it = e.find(t);
      return it == e.end() ? t : it->second;
    };
    for (const auto &t : targets) {
      std::string value = *torch_name_ + ".where(" + pred + ", " + current(then_env, t) + ", " +
                          current(else_env, t) + ")";
      if (result_prefix.empty()) {
        lines.push_back(t + " = " + value);
      } else {
        std::string name = names_.fresh(fn, result_prefix + t + "_");
        lines.push_back(name + " = " + value);
        env[t] = name;
      }
    }
  }

  void emit_branch(PredicationRewrite &root, const std::vector<NodeId> &stmts,
                   std::map<std::string, std::string> &env, const std::string &prefix,
                   std::vector<std::string> &lines) {
    NodeId fn = root.function;
    for (NodeId s : stmts) {
      const AstNode &n = tree_[s];
      switch (n.kind) {
      case NodeKind::Assign:
      case NodeKind::AnnAssign: {
        const std::string &t = tree_[n.children[0]].name;
        std::string rhs = renamed(ir_, n.children.back(), env);
        std::string name = names_.fresh(fn, prefix + t + "_");
        lines.push_back(name + " = " + rhs);
        env[t] = name;
        break;
      }
      case NodeKind::AugAssign: {
        const std::string &t = tree_[n.children[0]].name;
        auto it = env.find(t);
        std::string cur = it == env.end() ? t : it->second;
        std::string rhs = renamed(ir_, n.children[1], env);
        std::string name = names_.fresh(fn, prefix + t + "_");
        lines.push_back(name + " = " + cur + " " + n.op + " (" + rhs + ")");
        env[t] = name;
        break;
      }
      case NodeKind::If:
        emit_if(root, s, env, prefix, lines);
        break;
      default:
        break;
      }
    }
  }

  void generate(std::vector<PredicationRewrite> &group) {
    current_group_ = &group;
    PredicationRewrite &root = group.back();
    std::map<std::string, std::string> env;
    std::vector<std::string> lines;
    emit_if(root, root.if_node, env, "", lines);
    root.generated = std::move(lines);
    current_group_ = nullptr;
  }

  // --- deferral gate -------------------------------------------------------

  Gate plan_deferral(const GraphBreakTag &tag, DeferralRewrite &r) {
    NodeId call = tag.site;
    NodeId fn = tag.function;
    const SourceModule &src = ir_.source();
    auto stmt = tree_[call].parent;
    if (!stmt || tree_[*stmt].kind != NodeKind::ExprStmt) {
      return Gate::fail(kValueUsed);
    }
    auto block = tree_[*stmt].parent;
    if (!block || tree_[*block].parent != fn) {
      return Gate::fail(kNested);
    }
    for (std::size_t i = 1; i < tree_[call].children.size(); ++i) {
      auto k = tree_[tree_[call].children[i]].kind;
      if (k == NodeKind::Keyword || k == NodeKind::Starred) {
        return Gate::fail(kCallForm);
      }
    }
    NodeId body = *tree_.body(fn);
    NodeId first = tree_[body].children.front();
    if (!starts_line(src, tree_[first].span.begin)) {
      return Gate::fail(kUnsupportedSyntax);
    }

    const FunctionCfg *cfg = ir_.cfg_of(fn);
    auto site = cfg ? cfg->index_of(*stmt) : std::nullopt;
    if (!site) {
      return Gate::fail(kUnsupportedStmt);
    }
    Dominators dom(*cfg);
    for (CfgIndex i = 0; i < cfg->size(); ++i) {
      auto s = cfg->nodes()[i].stmt;
      if (s && tree_[*s].kind == NodeKind::Return && dom.dominates(*site, i)) {
        if (!starts_line(src, tree_[*s].span.begin)) {
          return Gate::fail(kUnsupportedSyntax);
        }
        r.epilogue_returns.push_back(*s);
      }
    }
    for (const auto &e : cfg->edges()) {
      if (e.to == FunctionCfg::kExit && e.kind != EdgeKind::Return) {
        r.fall_off_end = true;
      }
    }
    if (r.epilogue_returns.empty() && !r.fall_off_end) {
      return Gate::fail(kNoReturn);
    }
    std::sort(r.epilogue_returns.begin(), r.epilogue_returns.end(),
              [&](NodeId a, NodeId b) { return tree_[a].span.begin < tree_[b].span.begin; });

    const AstNode &c = tree_[call];
    NodeId func = c.children.at(0);
    std::string_view after = src.slice({tree_[func].span.end, c.span.end});
    auto open = after.find('(');
    auto close = after.rfind(')');
    std::string args(after.substr(open + 1, close - open - 1));
    std::string trimmed = args;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) {
      trimmed.pop_back();
    }
    if (c.children.size() == 2 && (trimmed.empty() || trimmed.back() != ',')) {
      args = trimmed + ",";
    }
    r.call_node = call;
    r.stmt = *stmt;
    r.function = fn;
    r.args_src = args;
    r.callee_src = std::string(src.slice(tree_[func].span));
    r.capture_name = names_.fresh(fn, "__gm_defer_");
    return {};
  }

  const UniIR &ir_;
  const Tree &tree_;
  const Detection &det_;
  const AnalysisConfig &config_;
  NameAllocator names_;
  std::set<NodeId> dyn_ifs_;
  std::optional<std::string> torch_name_;
  std::map<NodeId, DefiniteAssignment> da_;
  std::vector<PredicationRewrite> *current_group_ = nullptr;
};

} // namespace

TransformPlan plan_fixes(const UniIR &ir, const Detection &detection,
                         const AnalysisConfig &config) {
  return Planner(ir, detection, config).run();
}

namespace {

std::string join_lines(const std::vector<std::string> &lines, std::string_view indent,
                       std::string_view newline) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) {
      out += newline;
      out += indent;
    }
    out += lines[i];
  }
  return out;
}

SpanEdit predication_edit(const UniIR &ir, const PredicationRewrite &r) {
  const SourceModule &src = ir.source();
  std::string indent(leading_ws(src, r.range.begin));
  return {r.range, join_lines(r.generated, indent, src.newline())};
}

/// Edits for the deferrals of one function: capture at each call site, and
/// the replay epilogue at every return (and the fall-off end) they reach.
std::vector<SpanEdit> deferral_edits(const UniIR &ir,
                                     const std::vector<const DeferralRewrite *> &group) {
  const Tree &tree = ir.tree();
  const SourceModule &src = ir.source();
  std::vector<SpanEdit> edits;
  std::map<NodeId, std::vector<const DeferralRewrite *>> at_return;
  std::vector<const DeferralRewrite *> at_end;
  for (const auto *d : group) {
    edits.push_back({tree[d->stmt].span, d->capture_name + " = (" + d->args_src + ")"});
    for (NodeId ret : d->epilogue_returns) {
      at_return[ret].push_back(d);
    }
    if (d->fall_off_end) {
      at_end.push_back(d);
    }
  }
  auto by_site = [&](const DeferralRewrite *a, const DeferralRewrite *b) {
    return tree[a->call_node].span.begin < tree[b->call_node].span.begin;
  };
  auto replay = [](const DeferralRewrite *d) {
    return d->callee_src + "(*" + d->capture_name + ")";
  };
  for (auto &[ret, ds] : at_return) {
    std::sort(ds.begin(), ds.end(), by_site);
    const AstNode &r = tree[ret];
    std::vector<std::string> lines;
    std::string tail = "return";
    if (!r.children.empty()) {
      const std::string &temp = ds.front()->ret_names.at(ret);
      lines.push_back(temp + " = " + std::string(src.slice(tree[r.children[0]].span)));
      tail = "return " + temp;
    }
    for (const auto *d : ds) {
      lines.push_back(replay(d));
    }
    lines.push_back(tail);
    std::string indent(leading_ws(src, r.span.begin));
    edits.push_back({r.span, join_lines(lines, indent, src.newline())});
  }
  if (!at_end.empty()) {
    std::sort(at_end.begin(), at_end.end(), by_site);
    NodeId fn = at_end.front()->function;
    const auto &body = tree[*tree.body(fn)].children;
    std::string indent(leading_ws(src, tree[body.front()].span.begin));
    std::size_t at = src.line_end(tree[body.back()].span.end);
    std::string text;
    for (const auto *d : at_end) {
      text += std::string(src.newline()) + indent + replay(d);
    }
    edits.push_back({{at, at}, text});
  }
  return edits;
}

} // namespace

std::vector<SpanEdit> plan_edits(const UniIR &ir, const TransformPlan &plan) {
  std::vector<SpanEdit> edits;
  std::map<NodeId, std::vector<const DeferralRewrite *>> deferrals;
  for (const auto &rw : plan.rewrites) {
    if (const auto *p = std::get_if<PredicationRewrite>(&rw)) {
      if (p->if_node == p->group_root) {
        edits.push_back(predication_edit(ir, *p));
      }
    } else {
      const auto &d = std::get<DeferralRewrite>(rw);
      deferrals[d.function].push_back(&d);
    }
  }
  for (const auto &[fn, group] : deferrals) {
    auto more = deferral_edits(ir, group);
    edits.insert(edits.end(), more.begin(), more.end());
  }
  return edits;
}

void apply_predication(UniIR &ir, const PredicationRewrite &r) {
  if (r.generated.empty()) {
    throw std::invalid_argument("apply_predication: pass the group root");
  }
  std::vector<SpanEdit> edits{predication_edit(ir, r)};
  ir.apply_edits(edits);
}

void apply_deferral(UniIR &ir, const DeferralRewrite &r) {
  auto edits = deferral_edits(ir, {&r});
  ir.apply_edits(edits);
}

std::size_t apply_plan(UniIR &ir, const TransformPlan &plan) {
  auto edits = plan_edits(ir, plan);
  if (edits.empty()) {
    return 0;
  }
  try {
    ir.apply_edits(edits);
  } catch (const EditError &e) {
    throw VerificationError({std::string("edit set rejected: ") + e.what()});
  }
  ir.heal();
  return edits.size();
}

} // namespace graphmend
