#pragma once

#include "graphmend/config.hpp"
#include "graphmend/uniir.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace graphmend {

// ---------------------------------------------------------------------------
// Entry points

enum class EntryMechanism { Decorator, CallWrap, ModuleCompile };

std::string_view mechanism_name(EntryMechanism m);

struct EntryPoint {
  NodeId function = 0;
  EntryMechanism mechanism = EntryMechanism::Decorator;
  /// Source of the torch.compile argument list, without parentheses.
  std::string compile_args;
  /// The decorator or torch.compile call that made this an entry.
  NodeId evidence = 0;
};

/// Functions torch.compile will trace, in source order, one per function.
std::vector<EntryPoint> find_entry_points(const UniIR &ir);

// ---------------------------------------------------------------------------
// Expression queries shared by taint, detection and the transform gates

/// Import path the chain root of `expr` was bound from, if any.
[[nodiscard]] std::optional<std::string> root_import_path(const UniIR &ir, NodeId expr);
/// Dotted path of a Name/Attribute chain with the root replaced by its
/// import path (`F.relu` -> `torch.nn.functional.relu`).
[[nodiscard]] std::optional<std::string> resolved_path(const UniIR &ir, NodeId expr);
/// True when `expr`'s chain root was imported from the torch package.
[[nodiscard]] bool rooted_at_torch(const UniIR &ir, NodeId expr);
/// True when `expr` contains a call rooted at torch that yields a tensor.
[[nodiscard]] bool contains_torch_call(const UniIR &ir, NodeId expr);

/// Name loads whose runtime value flows into `expr`. Names reached only
/// through static attributes, `is` comparisons or type/len/hasattr-style
/// introspection are excluded. Lambda bodies are not entered.
[[nodiscard]] std::vector<NodeId> value_uses(const Tree &tree, const TorchAttrTable &attrs,
                                             NodeId expr);

/// Expressions a statement evaluates itself, leaving out nested blocks and
/// handlers (those are separate CFG nodes) and nested definitions.
[[nodiscard]] std::vector<NodeId> own_expressions(const Tree &tree, NodeId stmt);

/// Set of symbol ids, indexed by SymbolId.
using SymbolSet = std::vector<bool>;

// ---------------------------------------------------------------------------
// Taint

/// Forward may-taint facts for one function: which symbols may hold a tensor
/// derived from the function's inputs, before and after every CFG node.
struct TaintState {
  NodeId function = 0;
  std::vector<SymbolSet> in;
  std::vector<SymbolSet> out;

  [[nodiscard]] bool tainted_before(CfgIndex node, SymbolId sym) const {
    return sym < in.at(node).size() && in.at(node)[sym];
  }
  /// Symbols tainted at some program point.
  [[nodiscard]] std::set<SymbolId> tainted_anywhere() const;
  friend bool operator==(const TaintState &, const TaintState &) = default;
};

/// Parameters of `function` excluding a leading `self`.
[[nodiscard]] std::set<SymbolId> default_seeds(const UniIR &ir, NodeId function);

TaintState compute_taint(const UniIR &ir, const AnalysisConfig &config, NodeId function,
                         const std::set<SymbolId> &seeds);
TaintState compute_taint(const UniIR &ir, const AnalysisConfig &config, const EntryPoint &entry);

/// True when `expr`, evaluated with `tainted` holding, may produce a value
/// derived from tensor data.
[[nodiscard]] bool expr_tainted(const UniIR &ir, const AnalysisConfig &config,
                                const SymbolSet &tainted, NodeId expr);

/// Must-analysis: symbols definitely bound on every path reaching each node.
struct DefiniteAssignment {
  std::vector<SymbolSet> in;
  [[nodiscard]] bool assigned_before(CfgIndex node, SymbolId sym) const {
    return sym < in.at(node).size() && in.at(node)[sym];
  }
};

DefiniteAssignment compute_definite_assignment(const UniIR &ir, NodeId function);

/// Symbols a statement binds through its own expressions (not nested blocks).
[[nodiscard]] std::vector<SymbolId> statement_defs(const UniIR &ir, NodeId stmt);

// ---------------------------------------------------------------------------
// Detection

enum class BreakKind { DynCtrlFl, LoggerPrint, ItemAccess, DynamicShapeOp, UnsupportedOther };

std::string_view break_kind_name(BreakKind kind);

struct Evidence {
  NodeId node = 0;
  std::string reason;
  friend bool operator==(const Evidence &, const Evidence &) = default;
};

struct GraphBreakTag {
  NodeId site = 0;
  BreakKind kind = BreakKind::DynCtrlFl;
  bool fixable = false;
  /// Why the tag can never be fixed; empty when fixable.
  std::string unfixable_reason;
  std::vector<Evidence> evidence;
  /// Function whose body contains the site.
  NodeId function = 0;
  friend bool operator==(const GraphBreakTag &, const GraphBreakTag &) = default;
};

struct Detection {
  /// Sorted by source position of the site.
  std::vector<GraphBreakTag> tags;
  /// Taint per analyzed function (entries and inlined callees).
  std::map<NodeId, TaintState> taint;
  std::vector<std::string> notes;
};

/// Runs the worklist detection over every entry and its directly called
/// same-file functions.
Detection detect_breaks(const UniIR &ir, const std::vector<EntryPoint> &entries,
                        const AnalysisConfig &config);

/// True when `call` is a print / logger call.
[[nodiscard]] bool is_logger_print_call(const UniIR &ir, NodeId call);

} // namespace graphmend
