#pragma once

#include "graphmend/ast.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphmend {

using CfgIndex = std::uint32_t;

enum class EdgeKind : std::uint8_t { Fallthrough, TrueBranch, FalseBranch, LoopBack, Return };

std::string_view edge_kind_name(EdgeKind kind);

struct CfgNode {
  enum class Kind : std::uint8_t { Entry, Exit, Stmt };
  Kind kind = Kind::Stmt;
  /// Statement node; unset for ENTRY and EXIT.
  std::optional<NodeId> stmt;
};

struct CfgEdge {
  CfgIndex from = 0;
  CfgIndex to = 0;
  EdgeKind kind = EdgeKind::Fallthrough;
  friend bool operator==(const CfgEdge &, const CfgEdge &) = default;
};

/// Statement-level control-flow graph of one function body. Node 0 is ENTRY,
/// node 1 is EXIT.
class FunctionCfg {
public:
  static constexpr CfgIndex kEntry = 0;
  static constexpr CfgIndex kExit = 1;

  FunctionCfg() = default;
  explicit FunctionCfg(NodeId function);

  [[nodiscard]] NodeId function() const { return function_; }
  [[nodiscard]] const std::vector<CfgNode> &nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<CfgEdge> &edges() const { return edges_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<CfgIndex> &successors(CfgIndex n) const {
    return succ_.at(n);
  }
  [[nodiscard]] const std::vector<CfgIndex> &predecessors(CfgIndex n) const {
    return pred_.at(n);
  }
  /// Statements dropped because no path from ENTRY reaches them.
  [[nodiscard]] const std::vector<NodeId> &unreachable() const { return unreachable_; }

  [[nodiscard]] std::optional<CfgIndex> index_of(NodeId stmt) const;

  CfgIndex add_stmt(NodeId stmt);
  void add_edge(CfgIndex from, CfgIndex to, EdgeKind kind);
  void mark_unreachable(NodeId stmt) { unreachable_.push_back(stmt); }

  friend bool operator==(const FunctionCfg &a, const FunctionCfg &b) {
    return a.function_ == b.function_ && a.edges_ == b.edges_ &&
           a.unreachable_ == b.unreachable_ && a.stmt_ids() == b.stmt_ids();
  }

private:
  [[nodiscard]] std::vector<std::optional<NodeId>> stmt_ids() const;

  NodeId function_ = 0;
  std::vector<CfgNode> nodes_;
  std::vector<CfgEdge> edges_;
  std::vector<std::vector<CfgIndex>> succ_;
  std::vector<std::vector<CfgIndex>> pred_;
  std::vector<NodeId> unreachable_;
};

/// One CFG per FunctionDef in the tree (nested functions included), in
/// source order.
std::vector<FunctionCfg> build_cfgs(const Tree &tree);
FunctionCfg build_function_cfg(const Tree &tree, NodeId function);

/// Dominator sets computed by the iterative dataflow formulation.
class Dominators {
public:
  explicit Dominators(const FunctionCfg &cfg);
  /// True iff every ENTRY -> b path passes through a.
  [[nodiscard]] bool dominates(CfgIndex a, CfgIndex b) const;

private:
  std::vector<std::vector<bool>> dom_;
};

[[nodiscard]] bool dominates(const FunctionCfg &cfg, CfgIndex a, CfgIndex b);

/// Breadth-first worklist order of the nodes reachable from ENTRY's
/// successors; each node appears once.
[[nodiscard]] std::vector<CfgIndex> worklist_order(const FunctionCfg &cfg);

/// Violations of the CFG structural invariants (empty when sound).
[[nodiscard]] std::vector<std::string> verify_cfg(const Tree &tree, const FunctionCfg &cfg);

/// Statements in a function body, nested blocks included and nested defs'
/// bodies excluded. Counted from the tree alone, without the CFG.
[[nodiscard]] std::size_t modeled_statement_count(const Tree &tree, NodeId function);

} // namespace graphmend
