#pragma once

#include "graphmend/ast.hpp"
#include "graphmend/cfg.hpp"
#include "graphmend/source.hpp"
#include "graphmend/symtab.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphmend {

/// Structural invariants of the IR failed to hold after a build or heal.
class VerificationError : public std::runtime_error {
public:
  explicit VerificationError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string> &problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

/// Tree, symbol table and per-function CFGs of one file.
///
/// Mutation goes through apply_edits(), which re-parses the edited text and
/// leaves the IR inconsistent until heal() rebuilds the derived structures.
class UniIR {
public:
  /// Parses and builds. Throws SyntaxError or VerificationError.
  static UniIR build(SourceModule source);

  [[nodiscard]] const SourceModule &source() const { return source_; }
  [[nodiscard]] const Tree &tree() const { return tree_; }
  [[nodiscard]] const SymbolTable &symtab() const;
  [[nodiscard]] const std::vector<FunctionCfg> &cfgs() const;
  [[nodiscard]] const FunctionCfg *cfg_of(NodeId function) const;
  [[nodiscard]] bool consistent() const { return consistent_; }

  /// Direct access for tests that need to damage the tree.
  Tree &mutable_tree() {
    consistent_ = false;
    return tree_;
  }

  /// Replaces the text with the edited text and re-parses. A re-parse failure
  /// is reported as a VerificationError.
  void apply_edits(std::span<const SpanEdit> edits);

  /// Rebuilds the symbol table and CFGs, then re-verifies. Throws
  /// VerificationError.
  void heal();

  /// Human-readable notes gathered during the last build (unreachable code).
  [[nodiscard]] const std::vector<std::string> &warnings() const { return warnings_; }

private:
  void require_consistent() const;

  SourceModule source_;
  Tree tree_;
  SymbolTable symtab_;
  std::vector<FunctionCfg> cfgs_;
  std::vector<std::string> warnings_;
  bool consistent_ = false;
};

/// Tree-shape violations: parent/child links, span containment, sibling
/// order and positions.
[[nodiscard]] std::vector<std::string> verify_tree(const Tree &tree, const SourceModule &source);

/// `kind@line:col` label of a node.
[[nodiscard]] std::string node_label(const Tree &tree, NodeId id);

/// Text rendering of the scope tree and every function's edge list.
[[nodiscard]] std::string dump_ir(const UniIR &ir);

} // namespace graphmend
