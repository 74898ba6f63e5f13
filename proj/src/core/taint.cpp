#include "graphmend/analysis.hpp"

#include <deque>

namespace graphmend {

std::vector<NodeId> own_expressions(const Tree &tree, NodeId stmt) {
  const AstNode &n = tree[stmt];
  switch (n.kind) {
  case NodeKind::If:
  case NodeKind::While:
    return {n.children.at(0)};
  case NodeKind::For:
    return {n.children.at(0), n.children.at(1)};
  case NodeKind::With:
    return tree.children_of_kind(stmt, NodeKind::WithItem);
  case NodeKind::Try:
  case NodeKind::FunctionDef:
  case NodeKind::ClassDef:
    return {};
  default:
    return n.children;
  }
}

std::set<SymbolId> TaintState::tainted_anywhere() const {
  std::set<SymbolId> all;
  for (const auto &set : out) {
    for (SymbolId s = 0; s < set.size(); ++s) {
      if (set[s]) {
        all.insert(s);
      }
    }
  }
  return all;
}

std::set<SymbolId> default_seeds(const UniIR &ir, NodeId function) {
  const Tree &tree = ir.tree();
  std::set<SymbolId> seeds;
  auto params = tree.child_of_kind(function, NodeKind::Parameters);
  if (!params) {
    return seeds;
  }
  bool first = true;
  for (NodeId p : tree[*params].children) {
    const AstNode &param = tree[p];
    if (param.name.empty()) {
      continue;
    }
    bool skip = first && param.name == "self";
    first = false;
    if (skip) {
      continue;
    }
    if (auto sym = ir.symtab().symbol_of(p)) {
      seeds.insert(*sym);
    }
  }
  return seeds;
}

bool expr_tainted(const UniIR &ir, const AnalysisConfig &config, const SymbolSet &tainted,
                  NodeId expr) {
  for (NodeId use : value_uses(ir.tree(), config.attrs, expr)) {
    auto sym = ir.symtab().symbol_of(use);
    if (sym && *sym < tainted.size() && tainted[*sym]) {
      return true;
    }
  }
  return contains_torch_call(ir, expr);
}

namespace {

class TaintTransfer {
public:
  TaintTransfer(const UniIR &ir, const AnalysisConfig &config) : ir_(ir), config_(config) {}

  SymbolSet apply(NodeId stmt, SymbolSet set) const {
    const Tree &tree = ir_.tree();
    const AstNode &n = tree[stmt];
    for (NodeId e : own_expressions(tree, stmt)) {
      bind_walrus(e, set);
    }
    switch (n.kind) {
    case NodeKind::Assign: {
      bool t = tainted(n.children.back(), set);
      for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
        bind(n.children[i], t, set);
      }
      break;
    }
    case NodeKind::AnnAssign:
      if (n.children.size() == 3) {
        bind(n.children[0], tainted(n.children[2], set), set);
      }
      break;
    case NodeKind::AugAssign:
      if (tainted(n.children[1], set)) {
        bind(n.children[0], true, set);
      }
      break;
    case NodeKind::For:
      bind(n.children[0], tainted(n.children[1], set), set);
      break;
    case NodeKind::With:
      for (NodeId item : tree.children_of_kind(stmt, NodeKind::WithItem)) {
        const auto &kids = tree[item].children;
        if (kids.size() == 2) {
          bind(kids[1], tainted(kids[0], set), set);
        }
      }
      break;
    case NodeKind::FunctionDef:
    case NodeKind::ClassDef:
      kill(stmt, set);
      break;
    case NodeKind::Import:
    case NodeKind::ImportFrom:
      for (NodeId alias : n.children) {
        kill(alias, set);
      }
      break;
    default:
      break;
    }
    return set;
  }

private:
  bool tainted(NodeId expr, const SymbolSet &set) const {
    return expr_tainted(ir_, config_, set, expr);
  }

  void kill(NodeId def, SymbolSet &set) const {
    if (auto sym = ir_.symtab().symbol_of(def); sym && *sym < set.size()) {
      set[*sym] = false;
    }
  }

  void bind(NodeId target, bool t, SymbolSet &set) const {
    const Tree &tree = ir_.tree();
    const AstNode &n = tree[target];
    switch (n.kind) {
    case NodeKind::Name:
      if (auto sym = ir_.symtab().symbol_of(target); sym && *sym < set.size()) {
        set[*sym] = t;
      }
      break;
    case NodeKind::Tuple:
    case NodeKind::List:
      for (NodeId c : n.children) {
        bind(c, t, set);
      }
      break;
    case NodeKind::Starred:
      bind(n.children.at(0), t, set);
      break;
    case NodeKind::Subscript:
      // Storing a tensor into a container taints the container; the old
      // contents may survive, so this never kills.
      if (t) {
        if (auto root = chain_root(tree, target)) {
          if (auto sym = ir_.symtab().symbol_of(*root); sym && *sym < set.size()) {
            set[*sym] = true;
          }
        }
      }
      break;
    default:
      // Attribute stores are not tracked per field.
      break;
    }
  }

  void bind_walrus(NodeId expr, SymbolSet &set) const {
    const Tree &tree = ir_.tree();
    tree.walk(expr, [&](NodeId id) {
      if (tree[id].kind == NodeKind::Lambda) {
        return false;
      }
      if (tree[id].kind == NodeKind::NamedExpr) {
        bind(tree[id].children.at(0), tainted(tree[id].children.at(1), set), set);
      }
      return true;
    });
  }

  const UniIR &ir_;
  const AnalysisConfig &config_;
};

} // namespace

TaintState compute_taint(const UniIR &ir, const AnalysisConfig &config, NodeId function,
                         const std::set<SymbolId> &seeds) {
  const FunctionCfg *cfg = ir.cfg_of(function);
  if (cfg == nullptr) {
    throw std::invalid_argument("compute_taint: node is not a function with a CFG");
  }
  const std::size_t nsym = ir.symtab().symbols().size();
  TaintState state;
  state.function = function;
  state.in.assign(cfg->size(), SymbolSet(nsym, false));
  state.out.assign(cfg->size(), SymbolSet(nsym, false));
  for (SymbolId s : seeds) {
    state.out[FunctionCfg::kEntry].at(s) = true;
  }

  TaintTransfer transfer(ir, config);
  std::deque<CfgIndex> work;
  std::vector<bool> queued(cfg->size(), false);
  // Every node is visited once even if its input never changes: torch calls
  // generate taint from nothing.
  for (CfgIndex n : worklist_order(*cfg)) {
    work.push_back(n);
    queued[n] = true;
  }
  while (!work.empty()) {
    CfgIndex n = work.front();
    work.pop_front();
    queued[n] = false;
    SymbolSet in(nsym, false);
    for (CfgIndex p : cfg->predecessors(n)) {
      for (std::size_t i = 0; i < nsym; ++i) {
        if (state.out[p][i]) {
          in[i] = true;
        }
      }
    }
    state.in[n] = in;
    const auto &node = cfg->nodes()[n];
    SymbolSet out = node.stmt ? transfer.apply(*node.stmt, std::move(in)) : std::move(in);
    if (out != state.out[n]) {
      state.out[n] = std::move(out);
      for (CfgIndex s : cfg->successors(n)) {
        if (!queued[s]) {
          queued[s] = true;
          work.push_back(s);
        }
      }
    }
  }
  return state;
}

TaintState compute_taint(const UniIR &ir, const AnalysisConfig &config, const EntryPoint &entry) {
  return compute_taint(ir, config, entry.function, default_seeds(ir, entry.function));
}

std::vector<SymbolId> statement_defs(const UniIR &ir, NodeId stmt) {
  const Tree &tree = ir.tree();
  const AstNode &n = tree[stmt];
  std::vector<SymbolId> defs;
  auto add = [&](NodeId node) {
    if (auto sym = ir.symtab().symbol_of(node)) {
      defs.push_back(*sym);
    }
  };
  switch (n.kind) {
  case NodeKind::FunctionDef:
  case NodeKind::ClassDef:
    add(stmt);
    return defs;
  case NodeKind::Import:
  case NodeKind::ImportFrom:
    for (NodeId a : n.children) {
      add(a);
    }
    return defs;
  case NodeKind::AnnAssign:
    if (n.children.size() < 3) {
      return defs;
    }
    break;
  default:
    break;
  }
  for (NodeId e : own_expressions(tree, stmt)) {
    tree.walk(e, [&](NodeId id) {
      const AstNode &x = tree[id];
      if (x.kind == NodeKind::Lambda || x.kind == NodeKind::ListComp ||
          x.kind == NodeKind::SetComp || x.kind == NodeKind::DictComp ||
          x.kind == NodeKind::GeneratorExp) {
        // Only walrus targets escape a comprehension.
        tree.walk(id, [&](NodeId inner) {
          if (tree[inner].kind == NodeKind::NamedExpr) {
            add(tree[inner].children.at(0));
          }
          return tree[inner].kind != NodeKind::Lambda;
        });
        return false;
      }
      if (x.kind == NodeKind::Name && x.ctx == ExprCtx::Store) {
        add(id);
      }
      return true;
    });
  }
  return defs;
}

DefiniteAssignment compute_definite_assignment(const UniIR &ir, NodeId function) {
  const FunctionCfg *cfg = ir.cfg_of(function);
  if (cfg == nullptr) {
    throw std::invalid_argument("compute_definite_assignment: not a function with a CFG");
  }
  const auto &st = ir.symtab();
  const std::size_t nsym = st.symbols().size();
  auto scope = st.scope_owned_by(function);

  // Names owned by other scopes are bound elsewhere; parameters are bound on
  // entry. Everything else starts optimistic and is intersected down.
  SymbolSet entry(nsym, false);
  for (const auto &sym : st.symbols()) {
    entry[sym.id] = !scope || sym.scope != *scope || sym.is_parameter;
  }

  DefiniteAssignment da;
  da.in.assign(cfg->size(), SymbolSet(nsym, true));
  std::vector<SymbolSet> out(cfg->size(), SymbolSet(nsym, true));
  out[FunctionCfg::kEntry] = entry;
  da.in[FunctionCfg::kEntry] = entry;

  std::vector<std::vector<SymbolId>> gen(cfg->size());
  for (CfgIndex i = 0; i < cfg->size(); ++i) {
    if (auto s = cfg->nodes()[i].stmt) {
      gen[i] = statement_defs(ir, *s);
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (CfgIndex n = 0; n < cfg->size(); ++n) {
      if (n == FunctionCfg::kEntry) {
        continue;
      }
      SymbolSet in(nsym, true);
      for (CfgIndex p : cfg->predecessors(n)) {
        for (std::size_t i = 0; i < nsym; ++i) {
          in[i] = in[i] && out[p][i];
        }
      }
      SymbolSet o = in;
      for (SymbolId s : gen[n]) {
        o[s] = true;
      }
      if (in != da.in[n] || o != out[n]) {
        da.in[n] = std::move(in);
        out[n] = std::move(o);
        changed = true;
      }
    }
  }
  return da;
}

} // namespace graphmend
