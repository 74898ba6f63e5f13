#pragma once

#include "graphmend/ast.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace graphmend {

using ScopeId = std::uint32_t;
using SymbolId = std::uint32_t;

enum class ScopeKind : std::uint8_t { Module, Class, Function };

struct Scope {
  ScopeId id = 0;
  ScopeKind kind = ScopeKind::Module;
  std::optional<ScopeId> parent;
  NodeId owner = 0;
  std::vector<ScopeId> children;
  /// Names bound in this scope, in first-binding order.
  std::map<std::string, SymbolId> symbols;
};

struct Symbol {
  SymbolId id = 0;
  std::string name;
  ScopeId scope = 0;
  /// Defining nodes: Name (store), Param, FunctionDef, ClassDef.
  std::vector<NodeId> defs;
  /// Name (load) nodes resolved to this symbol.
  std::vector<NodeId> uses;
  bool is_parameter = false;
  /// No binding in any enclosing scope, or bound by an import.
  bool external = false;
  /// Dotted module path when the name comes from an import
  /// (`import torch.nn.functional as F` gives F -> "torch.nn.functional").
  std::optional<std::string> import_path;
};

/// Scoped symbol table. Names follow Python's lexical rules: a name bound
/// anywhere in a function is local to it; class scopes are invisible to the
/// functions nested in them; unresolved names become external symbols of the
/// module scope.
class SymbolTable {
public:
  [[nodiscard]] const std::vector<Scope> &scopes() const { return scopes_; }
  [[nodiscard]] const std::vector<Symbol> &symbols() const { return symbols_; }
  [[nodiscard]] const Scope &scope(ScopeId id) const { return scopes_.at(id); }
  [[nodiscard]] const Symbol &symbol(SymbolId id) const { return symbols_.at(id); }

  /// Symbol a Name/Param/def node is attached to.
  [[nodiscard]] std::optional<SymbolId> symbol_of(NodeId node) const;
  /// Scope that owns `node` (the innermost scope whose region contains it).
  [[nodiscard]] std::optional<ScopeId> scope_of(NodeId node) const;
  /// Scope created by a FunctionDef/ClassDef/Lambda/comprehension node.
  [[nodiscard]] std::optional<ScopeId> scope_owned_by(NodeId owner) const;

  /// Resolves `name` as a load from `scope`.
  [[nodiscard]] std::optional<SymbolId> lookup(ScopeId scope, const std::string &name) const;

  /// True when `name` is bound in `scope` or any scope enclosing it.
  [[nodiscard]] bool visible(ScopeId scope, const std::string &name) const;
  /// True when any scope of the file binds `name`.
  [[nodiscard]] bool any_binding(const std::string &name) const;

  // Mutators used by the builder.
  ScopeId add_scope(ScopeKind kind, std::optional<ScopeId> parent, NodeId owner);
  SymbolId bind(ScopeId scope, const std::string &name);
  SymbolId external(const std::string &name);
  void attach(NodeId node, SymbolId sym) { node_symbol_[node] = sym; }
  void set_node_scope(NodeId node, ScopeId scope) { node_scope_[node] = scope; }
  Symbol &mutable_symbol(SymbolId id) { return symbols_.at(id); }

  friend bool operator==(const SymbolTable &a, const SymbolTable &b);

private:
  std::vector<Scope> scopes_;
  std::vector<Symbol> symbols_;
  std::unordered_map<NodeId, SymbolId> node_symbol_;
  std::unordered_map<NodeId, ScopeId> node_scope_;
  std::unordered_map<NodeId, ScopeId> owner_scope_;
};

bool operator==(const Scope &a, const Scope &b);
bool operator==(const Symbol &a, const Symbol &b);

SymbolTable build_symbol_table(const Tree &tree);

} // namespace graphmend
