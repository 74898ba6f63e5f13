#include "graphmend/ast.hpp"

#include <array>

namespace graphmend {

std::string_view kind_name(NodeKind kind) {
  static constexpr std::array<std::string_view, 62> names = {
      "module",        "block",       "function-def", "class-def",
      "if",            "while",       "for",          "try",
      "except",        "with",        "with-item",    "return",
      "assign",        "aug-assign",  "ann-assign",   "expr",
      "pass",          "break",       "continue",     "raise",
      "assert",        "del",         "global",       "nonlocal",
      "import",        "import-from", "import-alias", "decorator",
      "parameters",    "param",       "annotation",   "arguments",
      "name",          "constant",    "str",          "attribute",
      "call",          "keyword",     "starred",      "subscript",
      "slice",         "binary-op",   "unary-op",     "bool-op",
      "compare",       "if-exp",      "lambda",       "named-expr",
      "tuple",         "list",        "set",          "dict",
      "dict-unpack",   "list-comp",   "set-comp",     "generator-exp",
      "dict-comp",     "comprehension", "await",      "yield",
      "yield-from",    "?"};
  auto idx = static_cast<std::size_t>(kind);
  return idx < names.size() ? names[idx] : "?";
}

bool is_statement(NodeKind kind) {
  switch (kind) {
  case NodeKind::FunctionDef:
  case NodeKind::ClassDef:
  case NodeKind::If:
  case NodeKind::While:
  case NodeKind::For:
  case NodeKind::Try:
  case NodeKind::With:
  case NodeKind::Return:
  case NodeKind::Assign:
  case NodeKind::AugAssign:
  case NodeKind::AnnAssign:
  case NodeKind::ExprStmt:
  case NodeKind::Pass:
  case NodeKind::Break:
  case NodeKind::Continue:
  case NodeKind::Raise:
  case NodeKind::Assert:
  case NodeKind::Delete:
  case NodeKind::Global:
  case NodeKind::Nonlocal:
  case NodeKind::Import:
  case NodeKind::ImportFrom:
    return true;
  default:
    return false;
  }
}

bool is_compound_statement(NodeKind kind) {
  switch (kind) {
  case NodeKind::FunctionDef:
  case NodeKind::ClassDef:
  case NodeKind::If:
  case NodeKind::While:
  case NodeKind::For:
  case NodeKind::Try:
  case NodeKind::With:
    return true;
  default:
    return false;
  }
}

NodeId Tree::add(NodeKind kind, ByteRange span, LineCol pos) {
  AstNode node;
  node.id = static_cast<NodeId>(nodes_.size());
  node.kind = kind;
  node.span = span;
  node.pos = pos;
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

void Tree::adopt(NodeId parent, NodeId child) {
  nodes_.at(parent).children.push_back(child);
  nodes_.at(child).parent = parent;
}

std::vector<NodeId> Tree::children_of_kind(NodeId id, NodeKind kind) const {
  std::vector<NodeId> out;
  for (NodeId c : nodes_.at(id).children) {
    if (nodes_[c].kind == kind) {
      out.push_back(c);
    }
  }
  return out;
}

std::optional<NodeId> Tree::child_of_kind(NodeId id, NodeKind kind) const {
  for (NodeId c : nodes_.at(id).children) {
    if (nodes_[c].kind == kind) {
      return c;
    }
  }
  return std::nullopt;
}

std::optional<NodeId> Tree::body(NodeId id) const {
  return child_of_kind(id, NodeKind::Block);
}

std::optional<NodeId> Tree::orelse(NodeId id) const {
  const auto &n = nodes_.at(id);
  switch (n.kind) {
  case NodeKind::If:
    if (n.children.size() == 3) {
      return n.children[2];
    }
    return std::nullopt;
  case NodeKind::While:
    if (n.children.size() == 3) {
      return n.children[2];
    }
    return std::nullopt;
  case NodeKind::For:
    if (n.children.size() == 4) {
      return n.children[3];
    }
    return std::nullopt;
  default:
    return std::nullopt;
  }
}

std::optional<NodeId> Tree::test(NodeId id) const {
  const auto &n = nodes_.at(id);
  switch (n.kind) {
  case NodeKind::If:
  case NodeKind::While:
    return n.children.at(0);
  case NodeKind::For:
    return n.children.at(1);
  default:
    return std::nullopt;
  }
}

std::optional<NodeId> Tree::enclosing(NodeId id, NodeKind kind) const {
  auto cur = nodes_.at(id).parent;
  while (cur) {
    if (nodes_[*cur].kind == kind) {
      return cur;
    }
    cur = nodes_[*cur].parent;
  }
  return std::nullopt;
}

std::optional<std::string> dotted_name(const Tree &tree, NodeId id) {
  const auto &n = tree[id];
  if (n.kind == NodeKind::Name) {
    return n.name;
  }
  if (n.kind == NodeKind::Attribute) {
    auto base = dotted_name(tree, n.children.at(0));
    if (!base) {
      return std::nullopt;
    }
    return *base + "." + n.name;
  }
  return std::nullopt;
}

std::optional<NodeId> chain_root(const Tree &tree, NodeId id) {
  NodeId cur = id;
  while (true) {
    const auto &n = tree[cur];
    switch (n.kind) {
    case NodeKind::Name:
      return cur;
    case NodeKind::Attribute:
    case NodeKind::Call:
    case NodeKind::Subscript:
      cur = n.children.at(0);
      break;
    default:
      return std::nullopt;
    }
  }
}

} // namespace graphmend
