#include "graphmend/symtab.hpp"

#include <algorithm>
#include <set>

namespace graphmend {

std::optional<SymbolId> SymbolTable::symbol_of(NodeId node) const {
  auto it = node_symbol_.find(node);
  if (it == node_symbol_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<ScopeId> SymbolTable::scope_of(NodeId node) const {
  auto it = node_scope_.find(node);
  if (it == node_scope_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<ScopeId> SymbolTable::scope_owned_by(NodeId owner) const {
  auto it = owner_scope_.find(owner);
  if (it == owner_scope_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<SymbolId> SymbolTable::lookup(ScopeId scope, const std::string &name) const {
  std::optional<ScopeId> cur = scope;
  bool first = true;
  while (cur) {
    const Scope &s = scopes_[*cur];
    if (first || s.kind != ScopeKind::Class) {
      auto it = s.symbols.find(name);
      if (it != s.symbols.end()) {
        return it->second;
      }
    }
    first = false;
    cur = s.parent;
  }
  for (const auto &sym : symbols_) {
    if (sym.external && !sym.import_path && sym.name == name) {
      return sym.id;
    }
  }
  return std::nullopt;
}

bool SymbolTable::visible(ScopeId scope, const std::string &name) const {
  std::optional<ScopeId> cur = scope;
  while (cur) {
    if (scopes_[*cur].symbols.count(name) != 0) {
      return true;
    }
    cur = scopes_[*cur].parent;
  }
  return false;
}

bool SymbolTable::any_binding(const std::string &name) const {
  for (const auto &sym : symbols_) {
    if (sym.name == name) {
      return true;
    }
  }
  return false;
}

ScopeId SymbolTable::add_scope(ScopeKind kind, std::optional<ScopeId> parent,
                               NodeId owner) {
  Scope s;
  s.id = static_cast<ScopeId>(scopes_.size());
  s.kind = kind;
  s.parent = parent;
  s.owner = owner;
  scopes_.push_back(std::move(s));
  if (parent) {
    scopes_[*parent].children.push_back(scopes_.back().id);
  }
  owner_scope_[owner] = scopes_.back().id;
  return scopes_.back().id;
}

SymbolId SymbolTable::bind(ScopeId scope, const std::string &name) {
  auto &s = scopes_.at(scope);
  auto it = s.symbols.find(name);
  if (it != s.symbols.end()) {
    return it->second;
  }
  Symbol sym;
  sym.id = static_cast<SymbolId>(symbols_.size());
  sym.name = name;
  sym.scope = scope;
  symbols_.push_back(std::move(sym));
  s.symbols.emplace(name, symbols_.back().id);
  return symbols_.back().id;
}

SymbolId SymbolTable::external(const std::string &name) {
  for (const auto &sym : symbols_) {
    if (sym.external && !sym.import_path && sym.name == name) {
      return sym.id;
    }
  }
  Symbol sym;
  sym.id = static_cast<SymbolId>(symbols_.size());
  sym.name = name;
  sym.scope = 0;
  sym.external = true;
  symbols_.push_back(std::move(sym));
  return symbols_.back().id;
}

bool operator==(const Scope &a, const Scope &b) {
  return a.id == b.id && a.kind == b.kind && a.parent == b.parent &&
         a.owner == b.owner && a.children == b.children && a.symbols == b.symbols;
}

bool operator==(const Symbol &a, const Symbol &b) {
  return a.id == b.id && a.name == b.name && a.scope == b.scope && a.defs == b.defs &&
         a.uses == b.uses && a.is_parameter == b.is_parameter &&
         a.external == b.external && a.import_path == b.import_path;
}

bool operator==(const SymbolTable &a, const SymbolTable &b) {
  return a.scopes_ == b.scopes_ && a.symbols_ == b.symbols_ &&
         a.node_symbol_ == b.node_symbol_ && a.node_scope_ == b.node_scope_;
}

namespace {

class SymtabBuilder {
public:
  explicit SymtabBuilder(const Tree &tree) : tree_(tree) {}

  SymbolTable run() {
    ScopeId module = table_.add_scope(ScopeKind::Module, std::nullopt, tree_.root());
    declared_.emplace_back();
    table_.set_node_scope(tree_.root(), module);
    for (NodeId c : tree_[tree_.root()].children) {
      visit(c, module);
    }
    for (const auto &[node, scope] : loads_) {
      resolve_load(node, scope);
    }
    auto by_position = [this](NodeId a, NodeId b) {
      return tree_[a].span.begin != tree_[b].span.begin
                 ? tree_[a].span.begin < tree_[b].span.begin
                 : a < b;
    };
    for (std::size_t i = 0; i < table_.symbols().size(); ++i) {
      auto &sym = table_.mutable_symbol(static_cast<SymbolId>(i));
      std::sort(sym.defs.begin(), sym.defs.end(), by_position);
      std::sort(sym.uses.begin(), sym.uses.end(), by_position);
    }
    return std::move(table_);
  }

private:
  struct Declarations {
    std::set<std::string> globals;
    std::set<std::string> nonlocals;
  };

  ScopeId new_scope(ScopeKind kind, ScopeId parent, NodeId owner) {
    ScopeId s = table_.add_scope(kind, parent, owner);
    declared_.emplace_back();
    return s;
  }

  // Scope that receives a store of `name` issued in `scope`.
  ScopeId binding_scope(ScopeId scope, const std::string &name) {
    if (declared_[scope].globals.count(name) != 0) {
      return 0;
    }
    if (declared_[scope].nonlocals.count(name) != 0) {
      auto cur = table_.scope(scope).parent;
      while (cur && *cur != 0) {
        if (table_.scope(*cur).kind == ScopeKind::Function &&
            table_.scope(*cur).symbols.count(name) != 0) {
          return *cur;
        }
        cur = table_.scope(*cur).parent;
      }
    }
    return scope;
  }

  void define(ScopeId scope, const std::string &name, NodeId def) {
    SymbolId sym = table_.bind(binding_scope(scope, name), name);
    table_.mutable_symbol(sym).defs.push_back(def);
    table_.attach(def, sym);
  }

  void define_import(ScopeId scope, NodeId alias_node, const std::string &bound,
                     const std::string &path) {
    SymbolId sym = table_.bind(binding_scope(scope, bound), bound);
    auto &s = table_.mutable_symbol(sym);
    s.external = true;
    s.import_path = path;
    table_.attach(alias_node, sym);
  }

  void visit_children(NodeId id, ScopeId scope) {
    for (NodeId c : tree_[id].children) {
      visit(c, scope);
    }
  }

  void visit_parameters(NodeId params, ScopeId outer, ScopeId inner) {
    table_.set_node_scope(params, inner);
    for (NodeId p : tree_[params].children) {
      table_.set_node_scope(p, inner);
      // Annotations and defaults are evaluated in the enclosing scope.
      visit_children(p, outer);
    }
    for (NodeId p : tree_[params].children) {
      const auto &param = tree_[p];
      if (param.name.empty()) {
        continue;
      }
      define(inner, param.name, p);
      table_.mutable_symbol(*table_.symbol_of(p)).is_parameter = true;
    }
  }

  void visit(NodeId id, ScopeId scope) {
    const AstNode &n = tree_[id];
    table_.set_node_scope(id, scope);
    switch (n.kind) {
    case NodeKind::FunctionDef: {
      ScopeId fn = new_scope(ScopeKind::Function, scope, id);
      for (NodeId c : n.children) {
        auto k = tree_[c].kind;
        if (k == NodeKind::Decorator || k == NodeKind::Annotation) {
          visit(c, scope);
        }
      }
      define(scope, n.name, id);
      if (auto params = tree_.child_of_kind(id, NodeKind::Parameters)) {
        visit_parameters(*params, scope, fn);
      }
      if (auto body = tree_.body(id)) {
        collect_declarations(*body, fn);
        visit(*body, fn);
      }
      return;
    }
    case NodeKind::ClassDef: {
      for (NodeId c : n.children) {
        auto k = tree_[c].kind;
        if (k == NodeKind::Decorator || k == NodeKind::Arguments) {
          visit(c, scope);
        }
      }
      define(scope, n.name, id);
      ScopeId cls = new_scope(ScopeKind::Class, scope, id);
      if (auto body = tree_.body(id)) {
        collect_declarations(*body, cls);
        visit(*body, cls);
      }
      return;
    }
    case NodeKind::Lambda: {
      ScopeId fn = new_scope(ScopeKind::Function, scope, id);
      visit_parameters(n.children.at(0), scope, fn);
      visit(n.children.at(1), fn);
      return;
    }
    case NodeKind::ListComp:
    case NodeKind::SetComp:
    case NodeKind::GeneratorExp:
    case NodeKind::DictComp: {
      ScopeId fn = new_scope(ScopeKind::Function, scope, id);
      bool first_generator = true;
      // Generators first: their targets bind before the element is evaluated.
      for (NodeId c : n.children) {
        if (tree_[c].kind != NodeKind::Comprehension) {
          continue;
        }
        const auto &gen = tree_[c];
        table_.set_node_scope(c, fn);
        visit(gen.children.at(1), first_generator ? scope : fn);
        visit(gen.children.at(0), fn);
        for (std::size_t i = 2; i < gen.children.size(); ++i) {
          visit(gen.children[i], fn);
        }
        first_generator = false;
      }
      for (NodeId c : n.children) {
        if (tree_[c].kind != NodeKind::Comprehension) {
          visit(c, fn);
        }
      }
      return;
    }
    case NodeKind::Global:
    case NodeKind::Nonlocal:
      for (NodeId c : n.children) {
        table_.set_node_scope(c, scope);
      }
      return;
    case NodeKind::Import:
      for (NodeId a : n.children) {
        table_.set_node_scope(a, scope);
        const auto &alias = tree_[a];
        if (!alias.alias.empty()) {
          define_import(scope, a, alias.alias, alias.name);
        } else {
          auto dot = alias.name.find('.');
          std::string head = alias.name.substr(0, dot);
          define_import(scope, a, head, head);
        }
      }
      return;
    case NodeKind::ImportFrom:
      for (NodeId a : n.children) {
        table_.set_node_scope(a, scope);
        const auto &alias = tree_[a];
        if (alias.name == "*") {
          continue;
        }
        std::string path = n.op + n.name;
        if (!path.empty() && path.back() != '.') {
          path += ".";
        }
        path += alias.name;
        define_import(scope, a, alias.alias.empty() ? alias.name : alias.alias, path);
      }
      return;
    case NodeKind::ExceptHandler:
      if (!n.name.empty()) {
        define(scope, n.name, id);
      }
      visit_children(id, scope);
      return;
    case NodeKind::Name:
      if (n.ctx == ExprCtx::Store) {
        define(scope, n.name, id);
      } else {
        loads_.emplace_back(id, scope);
      }
      return;
    case NodeKind::NamedExpr: {
      // The walrus target binds in the nearest non-comprehension scope.
      ScopeId target_scope = scope;
      while (table_.scope(target_scope).kind == ScopeKind::Function &&
             is_comprehension(tree_[table_.scope(target_scope).owner].kind) &&
             table_.scope(target_scope).parent) {
        target_scope = *table_.scope(target_scope).parent;
      }
      table_.set_node_scope(n.children.at(0), scope);
      define(target_scope, tree_[n.children.at(0)].name, n.children.at(0));
      visit(n.children.at(1), scope);
      return;
    }
    default:
      visit_children(id, scope);
      return;
    }
  }

  static bool is_comprehension(NodeKind k) {
    return k == NodeKind::ListComp || k == NodeKind::SetComp ||
           k == NodeKind::GeneratorExp || k == NodeKind::DictComp;
  }

  // Records global/nonlocal declarations of a scope body before any binding
  // in it is processed.
  void collect_declarations(NodeId body, ScopeId scope) {
    tree_.walk(body, [&](NodeId id) {
      const auto &n = tree_[id];
      if (n.kind == NodeKind::FunctionDef || n.kind == NodeKind::ClassDef ||
          n.kind == NodeKind::Lambda) {
        return false;
      }
      if (n.kind == NodeKind::Global || n.kind == NodeKind::Nonlocal) {
        for (NodeId c : n.children) {
          if (n.kind == NodeKind::Global) {
            declared_[scope].globals.insert(tree_[c].name);
          } else {
            declared_[scope].nonlocals.insert(tree_[c].name);
          }
        }
      }
      return true;
    });
  }

  void resolve_load(NodeId node, ScopeId scope) {
    const std::string &name = tree_[node].name;
    std::optional<SymbolId> sym;
    if (declared_[scope].globals.count(name) != 0) {
      auto it = table_.scope(0).symbols.find(name);
      if (it != table_.scope(0).symbols.end()) {
        sym = it->second;
      }
    } else {
      sym = table_.lookup(scope, name);
      if (sym && table_.symbol(*sym).external && !table_.symbol(*sym).import_path) {
        sym.reset();
      }
    }
    if (!sym) {
      sym = table_.external(name);
    }
    table_.mutable_symbol(*sym).uses.push_back(node);
    table_.attach(node, *sym);
  }

  const Tree &tree_;
  SymbolTable table_;
  std::vector<Declarations> declared_;
  std::vector<std::pair<NodeId, ScopeId>> loads_;
};

} // namespace

SymbolTable build_symbol_table(const Tree &tree) { return SymtabBuilder(tree).run(); }

} // namespace graphmend
