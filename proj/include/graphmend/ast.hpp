#pragma once

#include "graphmend/source.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphmend {

using NodeId = std::uint32_t;

// Child layouts (in order; bracketed entries are optional):
//   Module        stmt*
//   Block         stmt*                      (name: "body"|"else"|"finally")
//   FunctionDef   Decorator* Parameters [Annotation] Block   (name)
//   ClassDef      Decorator* [Arguments] Block               (name)
//   If            test Block [Block(else) | If(elif)]        (name "elif" on elif arms)
//   While         test Block [Block(else)]
//   For           target iter Block [Block(else)]
//   Try           Block ExceptHandler* [Block(else)] [Block(finally)]
//   ExceptHandler [type] Block                               (name: as-name)
//   With          WithItem+ Block
//   WithItem      expr [target]
//   Return        [value]
//   Assign        target+ value
//   AugAssign     target value                               (op)
//   AnnAssign     target Annotation [value]
//   ExprStmt      expr
//   Raise         [exc [cause]]
//   Assert        test [msg]
//   Delete        target+
//   Global/Nonlocal Name+
//   Import        ImportAlias+
//   ImportFrom    ImportAlias*                               (name: module, op: dots)
//   ImportAlias                                              (name: dotted path, alias)
//   Decorator     expr
//   Parameters    Param*
//   Param         [Annotation] [default]                     (name, op: ""|"*"|"**"|"/")
//   Annotation    expr
//   Arguments     (Keyword|Starred|expr)*
//   Name                                                     (name, ctx)
//   Constant / Str                                           (Str: flags & kFString)
//   Attribute     value                                      (name: attribute, ctx)
//   Call          func (Keyword|Starred|expr)*
//   Keyword       value                                      (name)
//   Starred       value                                      (op: "*"|"**", ctx)
//   Subscript     value slice                                (ctx)
//   Slice         [lower] [upper] [step]                     (flags: kSlice* bits)
//   BinOp         left right                                 (op)
//   UnaryOp       operand                                    (op)
//   BoolOp        value+                                     (op)
//   Compare       left comparator+                           (ops)
//   IfExp         body test orelse
//   Lambda        Parameters body
//   NamedExpr     target value
//   Tuple/List/Set elt*                                      (ctx)
//   Dict          (key value | DictUnpack)*
//   DictUnpack    value
//   ListComp/SetComp/GeneratorExp  elt Comprehension+
//   DictComp      key value Comprehension+
//   Comprehension target iter cond*                          (flags & kAsync)
//   Await/Yield/YieldFrom  [value]
enum class NodeKind : std::uint8_t {
  Module,
  Block,
  FunctionDef,
  ClassDef,
  If,
  While,
  For,
  Try,
  ExceptHandler,
  With,
  WithItem,
  Return,
  Assign,
  AugAssign,
  AnnAssign,
  ExprStmt,
  Pass,
  Break,
  Continue,
  Raise,
  Assert,
  Delete,
  Global,
  Nonlocal,
  Import,
  ImportFrom,
  ImportAlias,
  Decorator,
  Parameters,
  Param,
  Annotation,
  Arguments,
  Name,
  Constant,
  Str,
  Attribute,
  Call,
  Keyword,
  Starred,
  Subscript,
  Slice,
  BinOp,
  UnaryOp,
  BoolOp,
  Compare,
  IfExp,
  Lambda,
  NamedExpr,
  Tuple,
  List,
  Set,
  Dict,
  DictUnpack,
  ListComp,
  SetComp,
  GeneratorExp,
  DictComp,
  Comprehension,
  Await,
  Yield,
  YieldFrom,
};

std::string_view kind_name(NodeKind kind);

enum class ExprCtx : std::uint8_t { Load, Store, Del };

namespace node_flags {
inline constexpr std::uint32_t kFString = 1u << 0;
inline constexpr std::uint32_t kAsync = 1u << 1;
inline constexpr std::uint32_t kSliceLower = 1u << 2;
inline constexpr std::uint32_t kSliceUpper = 1u << 3;
inline constexpr std::uint32_t kSliceStep = 1u << 4;
inline constexpr std::uint32_t kParenthesized = 1u << 5;
} // namespace node_flags

struct AstNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::Module;
  ByteRange span;
  LineCol pos;
  std::vector<NodeId> children;
  std::optional<NodeId> parent;

  std::string name;
  std::string alias;
  std::string op;
  std::vector<std::string> ops;
  ExprCtx ctx = ExprCtx::Load;
  std::uint32_t flags = 0;
};

[[nodiscard]] bool is_statement(NodeKind kind);
[[nodiscard]] bool is_compound_statement(NodeKind kind);

/// Arena of nodes owned by one parse. Node ids index `nodes`; the root is
/// always node 0.
class Tree {
public:
  [[nodiscard]] NodeId root() const { return 0; }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  [[nodiscard]] const AstNode &operator[](NodeId id) const { return nodes_.at(id); }
  [[nodiscard]] AstNode &operator[](NodeId id) { return nodes_.at(id); }
  [[nodiscard]] const std::vector<AstNode> &nodes() const { return nodes_; }

  NodeId add(NodeKind kind, ByteRange span, LineCol pos);
  void adopt(NodeId parent, NodeId child);

  /// Children of `id` with the given kind.
  [[nodiscard]] std::vector<NodeId> children_of_kind(NodeId id, NodeKind kind) const;
  /// First child of `id` with the given kind, if any.
  [[nodiscard]] std::optional<NodeId> child_of_kind(NodeId id, NodeKind kind) const;

  /// Body block of a FunctionDef / ClassDef / If / While / For / With /
  /// ExceptHandler; the first block of a Try.
  [[nodiscard]] std::optional<NodeId> body(NodeId id) const;
  /// The else arm of an If (a Block or an elif If), While or For.
  [[nodiscard]] std::optional<NodeId> orelse(NodeId id) const;
  /// Condition of If/While, iterable of For.
  [[nodiscard]] std::optional<NodeId> test(NodeId id) const;

  /// Innermost enclosing node of the given kind, excluding `id` itself.
  [[nodiscard]] std::optional<NodeId> enclosing(NodeId id, NodeKind kind) const;

  /// Pre-order walk of the subtree rooted at `id`. `visit` returns false to
  /// skip a node's children.
  template <typename Fn> void walk(NodeId id, Fn &&visit) const {
    std::vector<NodeId> stack{id};
    while (!stack.empty()) {
      NodeId cur = stack.back();
      stack.pop_back();
      if (!visit(cur)) {
        continue;
      }
      const auto &kids = nodes_[cur].children;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
        stack.push_back(*it);
      }
    }
  }

private:
  std::vector<AstNode> nodes_;
};

/// Dotted rendering of a Name/Attribute chain (`torch.nn.functional`), or
/// nullopt when the chain contains anything else.
[[nodiscard]] std::optional<std::string> dotted_name(const Tree &tree, NodeId id);

/// Leftmost Name of an Attribute/Call/Subscript chain.
[[nodiscard]] std::optional<NodeId> chain_root(const Tree &tree, NodeId id);

} // namespace graphmend
