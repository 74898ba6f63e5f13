#pragma once

#include "graphmend/analysis.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace graphmend {

/// Else-value marker: the target keeps the value it had before the if.
inline constexpr std::string_view kPriorValue = "<prior value>";

/// If-conversion of one tagged if-statement. Ifs nested inside a predicated
/// if are rewritten together with it; `group_root` names the outermost one,
/// which alone carries the generated code.
struct PredicationRewrite {
  NodeId if_node = 0;
  NodeId group_root = 0;
  NodeId function = 0;
  std::string pred_name;
  std::string cond_src;
  /// Names assigned in either branch, in order of first assignment.
  std::vector<std::string> targets;
  /// Last right-hand side per target in each branch, or kPriorValue.
  std::map<std::string, std::string> then_exprs;
  std::map<std::string, std::string> else_exprs;
  /// Why each target is safe: assigned in both branches, or bound before.
  std::vector<std::string> proof;
  /// Byte offset where the generated statements start.
  std::size_t insertion_point = 0;
  /// Replacement for the group root's span; empty for nested members.
  std::vector<std::string> generated;
  ByteRange range;
};

/// Moves a print/logger call to the function epilogue.
struct DeferralRewrite {
  NodeId call_node = 0;
  NodeId stmt = 0;
  NodeId function = 0;
  std::string capture_name;
  /// Argument list between the parentheses, verbatim.
  std::string args_src;
  std::string callee_src;
  /// Return statements the call site dominates.
  std::vector<NodeId> epilogue_returns;
  /// Control can also fall off the end of the body after the call.
  bool fall_off_end = false;
  /// Hoist temporary for each epilogue return that has a value.
  std::map<NodeId, std::string> ret_names;
};

using Rewrite = std::variant<PredicationRewrite, DeferralRewrite>;

struct SkippedTag {
  GraphBreakTag tag;
  std::string reason;
};

struct TransformPlan {
  std::string file;
  /// Predications innermost-first within a group, otherwise source order.
  std::vector<Rewrite> rewrites;
  std::vector<SkippedTag> skipped;
};

/// Runs the safety gates on every fixable tag and allocates fresh names.
/// Refusals are recorded in `skipped`, never thrown.
TransformPlan plan_fixes(const UniIR &ir, const Detection &detection,
                         const AnalysisConfig &config);

/// Text edits realizing the whole plan as one non-overlapping set.
std::vector<SpanEdit> plan_edits(const UniIR &ir, const TransformPlan &plan);

/// Rewrites one predication group (pass its root). Leaves the IR inconsistent.
void apply_predication(UniIR &ir, const PredicationRewrite &r);
/// Rewrites one deferral. Leaves the IR inconsistent.
void apply_deferral(UniIR &ir, const DeferralRewrite &r);

/// Applies every rewrite of the plan as one edit set and heals. Returns the
/// number of span edits. Throws VerificationError.
std::size_t apply_plan(UniIR &ir, const TransformPlan &plan);

} // namespace graphmend
