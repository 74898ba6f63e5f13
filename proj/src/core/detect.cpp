#include "graphmend/analysis.hpp"

#include <algorithm>
#include <tuple>

namespace graphmend {

std::string_view break_kind_name(BreakKind kind) {
  switch (kind) {
  case BreakKind::DynCtrlFl:
    return "DynCtrlFl";
  case BreakKind::LoggerPrint:
    return "LoggerPrint";
  case BreakKind::ItemAccess:
    return "ItemAccess";
  case BreakKind::DynamicShapeOp:
    return "DynamicShapeOp";
  case BreakKind::UnsupportedOther:
    return "UnsupportedOther";
  }
  return "?";
}

namespace {

bool bound_from_logging(const UniIR &ir, SymbolId sym) {
  const Tree &tree = ir.tree();
  const Symbol &s = ir.symtab().symbol(sym);
  if (s.import_path && (*s.import_path == "logging" || s.import_path->starts_with("logging."))) {
    return true;
  }
  for (NodeId d : s.defs) {
    const AstNode &def = tree[d];
    if (def.kind != NodeKind::Name || !def.parent ||
        tree[*def.parent].kind != NodeKind::Assign) {
      continue;
    }
    NodeId value = tree[*def.parent].children.back();
    if (tree[value].kind == NodeKind::Call) {
      auto path = resolved_path(ir, tree[value].children.at(0));
      if (path && path->starts_with("logging.")) {
        return true;
      }
    }
  }
  return false;
}

// `print(*__gm_defer_0)` lines written by an earlier deferral rewrite.
bool is_epilogue_replay(const Tree &tree, NodeId call) {
  const auto &c = tree[call];
  if (c.children.size() != 2) {
    return false;
  }
  const auto &arg = tree[c.children[1]];
  if (arg.kind != NodeKind::Starred || arg.op != "*") {
    return false;
  }
  const auto &inner = tree[arg.children.at(0)];
  return inner.kind == NodeKind::Name && inner.name.starts_with("__gm_defer_");
}

} // namespace

bool is_logger_print_call(const UniIR &ir, NodeId call) {
  const Tree &tree = ir.tree();
  if (tree[call].kind != NodeKind::Call) {
    return false;
  }
  NodeId func = tree[call].children.at(0);
  const AstNode &f = tree[func];
  if (f.kind == NodeKind::Name) {
    if (f.name != "print") {
      return false;
    }
    auto sym = ir.symtab().symbol_of(func);
    return sym && ir.symtab().symbol(*sym).external && !ir.symtab().symbol(*sym).import_path;
  }
  if (f.kind != NodeKind::Attribute) {
    return false;
  }
  const AstNode &recv = tree[f.children.at(0)];
  if (recv.kind == NodeKind::Name) {
    if (recv.name == "logger" || recv.name == "logging") {
      return true;
    }
    auto sym = ir.symtab().symbol_of(f.children.at(0));
    return sym && bound_from_logging(ir, *sym);
  }
  return recv.kind == NodeKind::Attribute && recv.name == "logger";
}

namespace {

class Detector {
public:
  Detector(const UniIR &ir, const AnalysisConfig &config) : ir_(ir), tree_(ir.tree()), config_(config) {}

  Detection run(const std::vector<EntryPoint> &entries) {
    for (const auto &e : entries) {
      if (!result_.taint.contains(e.function)) {
        result_.taint.emplace(e.function, compute_taint(ir_, config_, e));
      }
    }
    for (const auto &e : entries) {
      scan_function(e.function, /*depth=*/0);
    }
    // Depth-1 callees, in the order their first call site was seen.
    for (std::size_t i = 0; i < callees_.size(); ++i) {
      auto [fn, seeds] = callees_[i];
      if (!result_.taint.contains(fn)) {
        result_.taint.emplace(fn, compute_taint(ir_, config_, fn, seeds));
      }
      if (std::none_of(entries.begin(), entries.end(),
                       [&](const EntryPoint &e) { return e.function == fn; })) {
        scan_function(fn, /*depth=*/1);
      }
    }
    auto &tags = result_.tags;
    std::sort(tags.begin(), tags.end(), [&](const GraphBreakTag &a, const GraphBreakTag &b) {
      return std::tuple(tree_[a.site].span.begin, a.kind) <
             std::tuple(tree_[b.site].span.begin, b.kind);
    });
    tags.erase(std::unique(tags.begin(), tags.end(),
                           [](const GraphBreakTag &a, const GraphBreakTag &b) {
                             return a.site == b.site && a.kind == b.kind;
                           }),
               tags.end());
    return std::move(result_);
  }

private:
  void scan_function(NodeId fn, int depth) {
    const FunctionCfg *cfg = ir_.cfg_of(fn);
    if (cfg == nullptr) {
      return;
    }
    const TaintState &taint = result_.taint.at(fn);
    for (CfgIndex n : worklist_order(*cfg)) {
      const auto &node = cfg->nodes()[n];
      if (node.stmt) {
        scan_statement(fn, *node.stmt, taint.in[n], depth);
      }
    }
  }

  void tag(NodeId fn, NodeId site, BreakKind kind, std::vector<Evidence> evidence,
           std::string unfixable = {}) {
    GraphBreakTag t;
    t.site = site;
    t.kind = kind;
    t.fixable = unfixable.empty();
    t.unfixable_reason = std::move(unfixable);
    t.evidence = std::move(evidence);
    t.function = fn;
    result_.tags.push_back(std::move(t));
  }

  bool tensor_valued(NodeId expr, const SymbolSet &tainted) const {
    return expr_tainted(ir_, config_, tainted, expr) || rooted_at_torch(ir_, expr);
  }

  /// Evidence that a condition depends on tensor values, or empty.
  std::vector<Evidence> condition_evidence(NodeId test, const SymbolSet &tainted) const {
    std::vector<Evidence> ev;
    // A dynamic torch attribute anywhere in the condition decides it.
    tree_.walk(test, [&](NodeId id) {
      if (!ev.empty() || tree_[id].kind == NodeKind::Lambda) {
        return false;
      }
      const AstNode &n = tree_[id];
      if (n.kind != NodeKind::Attribute) {
        return true;
      }
      NodeId recv = n.children.at(0);
      bool called = n.parent && tree_[*n.parent].kind == NodeKind::Call &&
                    tree_[*n.parent].children.at(0) == id;
      NodeId site = called ? *n.parent : id;
      if (config_.attrs.is_dynamic(n.name) && tensor_valued(recv, tainted)) {
        ev.push_back({site, "attr '" + n.name + "' dynamic"});
        return false;
      }
      if (called && !config_.attrs.find(n.name) && expr_tainted(ir_, config_, tainted, recv)) {
        ev.push_back({site, "attr '" + n.name + "' not in table, tensor receiver"});
        return false;
      }
      return true;
    });
    if (!ev.empty()) {
      return ev;
    }
    for (NodeId use : value_uses(tree_, config_.attrs, test)) {
      auto sym = ir_.symtab().symbol_of(use);
      if (sym && *sym < tainted.size() && tainted[*sym]) {
        ev.push_back({use, "depends on tainted '" + tree_[use].name + "'"});
        return ev;
      }
    }
    return ev;
  }

  void scan_statement(NodeId fn, NodeId stmt, const SymbolSet &tainted, int depth) {
    const AstNode &s = tree_[stmt];
    if (s.kind == NodeKind::If || s.kind == NodeKind::While || s.kind == NodeKind::For) {
      NodeId test = *tree_.test(stmt);
      auto ev = condition_evidence(test, tainted);
      if (!ev.empty()) {
        tag(fn, stmt, BreakKind::DynCtrlFl, std::move(ev),
            s.kind == NodeKind::If ? "" : "loop");
      }
    }
    for (NodeId root : own_expressions(tree_, stmt)) {
      tree_.walk(root, [&](NodeId id) {
        if (tree_[id].kind == NodeKind::Lambda) {
          return false;
        }
        if (tree_[id].kind == NodeKind::Call) {
          scan_call(fn, id, tainted, depth);
        }
        return true;
      });
    }
  }

  void scan_call(NodeId fn, NodeId call, const SymbolSet &tainted, int depth) {
    NodeId func = tree_[call].children.at(0);
    const AstNode &f = tree_[func];
    if (is_logger_print_call(ir_, call)) {
      if (!is_epilogue_replay(tree_, call)) {
        tag(fn, call, BreakKind::LoggerPrint, {{call, "side-effecting call"}});
      }
      return;
    }
    if (resolved_path(ir_, func) == "torch._dynamo.graph_break") {
      tag(fn, call, BreakKind::UnsupportedOther, {{call, "explicit graph_break()"}},
          "explicit graph_break()");
      return;
    }
    const std::string &last = f.kind == NodeKind::Attribute || f.kind == NodeKind::Name
                                  ? f.name
                                  : empty_;
    bool method = f.kind == NodeKind::Attribute;
    bool tensor_recv = method && expr_tainted(ir_, config_, tainted, f.children.at(0));
    if (method && (last == "item" || last == "data_ptr") && tensor_recv) {
      tag(fn, call, BreakKind::ItemAccess, {{call, "host read of tensor data"}},
          "data access (." + last + ")");
      return;
    }
    if (config_.dynamic_shape_ops.contains(last) &&
        (tensor_recv || rooted_at_torch(ir_, func))) {
      tag(fn, call, BreakKind::DynamicShapeOp, {{call, "output shape depends on values"}},
          "dynamic-shape operator '" + last + "'");
      return;
    }
    if (method && (last == "tolist" || last == "numpy") && tensor_recv) {
      tag(fn, call, BreakKind::UnsupportedOther, {{call, "host conversion"}},
          "host conversion (." + last + ")");
      return;
    }
    if (auto callee = resolve_callee(fn, call)) {
      if (depth == 0) {
        queue_callee(callee->first, callee->second, call, tainted);
      } else {
        result_.notes.push_back("call to '" + tree_[callee->first].name + "' at line " +
                                std::to_string(tree_[call].pos.line) + " in '" +
                                tree_[fn].name + "' not analyzed (call depth limit)");
      }
    }
  }

  std::optional<NodeId> enclosing_class(NodeId fn) const {
    auto parent = tree_[fn].parent;
    if (!parent || tree_[*parent].kind != NodeKind::Block) {
      return std::nullopt;
    }
    auto cls = tree_[*parent].parent;
    if (!cls || tree_[*cls].kind != NodeKind::ClassDef) {
      return std::nullopt;
    }
    return *cls;
  }

  std::optional<NodeId> method_of(NodeId cls, const std::string &name) const {
    for (NodeId s : tree_[*tree_.body(cls)].children) {
      if (tree_[s].kind == NodeKind::FunctionDef && tree_[s].name == name) {
        return s;
      }
    }
    return std::nullopt;
  }

  std::optional<std::string> self_name(NodeId fn) const {
    auto params = tree_.child_of_kind(fn, NodeKind::Parameters);
    if (!params || tree_[*params].children.empty()) {
      return std::nullopt;
    }
    return tree_[tree_[*params].children.front()].name;
  }

  /// Callee FunctionDef and whether it is invoked as a bound method.
  std::optional<std::pair<NodeId, bool>> resolve_callee(NodeId fn, NodeId call) const {
    NodeId func = tree_[call].children.at(0);
    const AstNode &f = tree_[func];
    if (f.kind == NodeKind::Name) {
      auto sym = ir_.symtab().symbol_of(func);
      if (!sym || ir_.symtab().symbol(*sym).scope != 0) {
        return std::nullopt;
      }
      for (NodeId d : ir_.symtab().symbol(*sym).defs) {
        if (tree_[d].kind == NodeKind::FunctionDef && tree_[d].parent == tree_.root()) {
          return std::pair{d, false};
        }
      }
      return std::nullopt;
    }
    if (f.kind != NodeKind::Attribute) {
      return std::nullopt;
    }
    const AstNode &recv = tree_[f.children.at(0)];
    auto cls = enclosing_class(fn);
    auto self = self_name(fn);
    if (!cls || !self || recv.kind != NodeKind::Name || recv.name != *self) {
      return std::nullopt;
    }
    if (auto m = method_of(*cls, f.name)) {
      return std::pair{*m, true};
    }
    // self.attr(...) where __init__ assigns self.attr = SameFileClass(...).
    auto init = method_of(*cls, "__init__");
    if (!init) {
      return std::nullopt;
    }
    std::optional<std::pair<NodeId, bool>> found;
    tree_.walk(*init, [&](NodeId id) {
      const AstNode &n = tree_[id];
      if (found || n.kind != NodeKind::Assign) {
        return !found.has_value();
      }
      NodeId value = n.children.back();
      for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
        const AstNode &t = tree_[n.children[i]];
        if (t.kind != NodeKind::Attribute || t.name != f.name ||
            tree_[t.children.at(0)].kind != NodeKind::Name) {
          continue;
        }
        if (tree_[value].kind != NodeKind::Call) {
          continue;
        }
        NodeId ctor = tree_[value].children.at(0);
        if (tree_[ctor].kind != NodeKind::Name) {
          continue;
        }
        auto sym = ir_.symtab().symbol_of(ctor);
        if (!sym) {
          continue;
        }
        for (NodeId d : ir_.symtab().symbol(*sym).defs) {
          if (tree_[d].kind == NodeKind::ClassDef) {
            if (auto fwd = method_of(d, "forward")) {
              found = std::pair{*fwd, true};
            }
          }
        }
      }
      return false;
    });
    return found;
  }

  /// Seeds the callee's parameters from the taint of the arguments bound to
  /// them.
  void queue_callee(NodeId callee, bool bound_method, NodeId call, const SymbolSet &tainted) {
    std::vector<NodeId> params;
    std::optional<NodeId> var_pos;
    std::optional<NodeId> var_kw;
    auto pnode = tree_.child_of_kind(callee, NodeKind::Parameters);
    if (pnode) {
      for (NodeId p : tree_[*pnode].children) {
        const AstNode &param = tree_[p];
        if (param.op == "*" && !param.name.empty()) {
          var_pos = p;
        } else if (param.op == "**") {
          var_kw = p;
        } else if (param.op.empty() && !param.name.empty()) {
          params.push_back(p);
        }
      }
    }
    if (bound_method && !params.empty()) {
      params.erase(params.begin());
    }
    std::set<SymbolId> seeds;
    auto seed = [&](NodeId param) {
      if (auto sym = ir_.symtab().symbol_of(param)) {
        seeds.insert(*sym);
      }
    };
    std::size_t pos = 0;
    const auto &kids = tree_[call].children;
    for (std::size_t i = 1; i < kids.size(); ++i) {
      const AstNode &arg = tree_[kids[i]];
      if (arg.kind == NodeKind::Keyword) {
        bool t = expr_tainted(ir_, config_, tainted, arg.children.at(0));
        if (!t) {
          continue;
        }
        auto it = std::find_if(params.begin(), params.end(),
                               [&](NodeId p) { return tree_[p].name == arg.name; });
        if (it != params.end()) {
          seed(*it);
        } else if (var_kw) {
          seed(*var_kw);
        }
      } else if (arg.kind == NodeKind::Starred) {
        if (expr_tainted(ir_, config_, tainted, arg.children.at(0))) {
          for (std::size_t k = arg.op == "*" ? pos : 0; k < params.size(); ++k) {
            seed(params[k]);
          }
          if (var_pos && arg.op == "*") {
            seed(*var_pos);
          }
          if (var_kw && arg.op == "**") {
            seed(*var_kw);
          }
        }
      } else {
        bool t = expr_tainted(ir_, config_, tainted, kids[i]);
        if (t) {
          if (pos < params.size()) {
            seed(params[pos]);
          } else if (var_pos) {
            seed(*var_pos);
          }
        }
        ++pos;
      }
    }
    for (auto &[fn, existing] : callees_) {
      if (fn == callee) {
        existing.insert(seeds.begin(), seeds.end());
        return;
      }
    }
    callees_.emplace_back(callee, std::move(seeds));
  }

  const UniIR &ir_;
  const Tree &tree_;
  const AnalysisConfig &config_;
  Detection result_;
  std::vector<std::pair<NodeId, std::set<SymbolId>>> callees_;
  const std::string empty_;
};

} // namespace

Detection detect_breaks(const UniIR &ir, const std::vector<EntryPoint> &entries,
                        const AnalysisConfig &config) {
  return Detector(ir, config).run(entries);
}

} // namespace graphmend
