#include "graphmend/uniir.hpp"

#include "graphmend/parser.hpp"

#include <algorithm>
#include <sstream>

namespace graphmend {

namespace {

std::string join_problems(const std::vector<std::string> &problems) {
  std::string msg = "IR verification failed";
  for (const auto &p : problems) {
    msg += "\n  " + p;
  }
  return msg;
}

} // namespace

VerificationError::VerificationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

UniIR UniIR::build(SourceModule source) {
  UniIR ir;
  ir.source_ = std::move(source);
  ir.tree_ = parse_module(ir.source_);
  ir.heal();
  return ir;
}

const SymbolTable &UniIR::symtab() const {
  require_consistent();
  return symtab_;
}

const std::vector<FunctionCfg> &UniIR::cfgs() const {
  require_consistent();
  return cfgs_;
}

const FunctionCfg *UniIR::cfg_of(NodeId function) const {
  require_consistent();
  for (const auto &cfg : cfgs_) {
    if (cfg.function() == function) {
      return &cfg;
    }
  }
  return nullptr;
}

void UniIR::require_consistent() const {
  if (!consistent_) {
    throw std::logic_error("UniIR queried while inconsistent; heal() first");
  }
}

void UniIR::apply_edits(std::span<const SpanEdit> edits) {
  std::string text = emit_source(source_.text(), edits);
  SourceModule next(source_.path(), std::move(text));
  consistent_ = false;
  try {
    tree_ = parse_module(next);
  } catch (const SyntaxError &e) {
    throw VerificationError({"rewritten text does not parse: " + std::string(e.what())});
  }
  source_ = std::move(next);
}

void UniIR::heal() {
  consistent_ = false;
  auto problems = verify_tree(tree_, source_);
  if (!problems.empty()) {
    throw VerificationError(std::move(problems));
  }
  symtab_ = build_symbol_table(tree_);
  cfgs_ = build_cfgs(tree_);
  warnings_.clear();
  for (const auto &cfg : cfgs_) {
    for (const auto &p : verify_cfg(tree_, cfg)) {
      problems.push_back(p);
    }
    for (NodeId dead : cfg.unreachable()) {
      warnings_.push_back("unreachable statement at line " +
                          std::to_string(tree_[dead].pos.line) + " in '" +
                          tree_[cfg.function()].name + "' is not modeled");
    }
  }
  if (!problems.empty()) {
    throw VerificationError(std::move(problems));
  }
  consistent_ = true;
}

std::vector<std::string> verify_tree(const Tree &tree, const SourceModule &source) {
  std::vector<std::string> problems;
  if (tree.empty()) {
    problems.emplace_back("tree has no root");
    return problems;
  }
  const std::size_t n = tree.size();
  const std::size_t text_size = source.text().size();
  std::vector<int> parent_refs(n, 0);
  for (NodeId id = 0; id < n; ++id) {
    const AstNode &node = tree[id];
    std::string at = "node " + std::to_string(id) + " (" + std::string(kind_name(node.kind)) + ")";
    if (node.id != id) {
      problems.push_back(at + ": id field is " + std::to_string(node.id));
    }
    if (node.span.begin > node.span.end || node.span.end > text_size) {
      problems.push_back(at + ": span out of bounds");
      continue;
    }
    if (node.pos != source.position(node.span.begin)) {
      problems.push_back(at + ": position does not match span start");
    }
    if (id == tree.root()) {
      if (node.parent) {
        problems.push_back(at + ": root has a parent");
      }
    } else if (!node.parent) {
      problems.push_back(at + ": missing parent");
    } else if (*node.parent >= n) {
      problems.push_back(at + ": dangling parent id " + std::to_string(*node.parent));
    } else {
      const auto &kids = tree[*node.parent].children;
      if (std::count(kids.begin(), kids.end(), id) != 1) {
        problems.push_back(at + ": not listed exactly once by its parent");
      }
    }
    std::size_t prev_end = node.span.begin;
    for (NodeId c : node.children) {
      if (c >= n) {
        problems.push_back(at + ": dangling child id " + std::to_string(c));
        continue;
      }
      ++parent_refs[c];
      const AstNode &child = tree[c];
      if (child.parent != id) {
        problems.push_back(at + ": child " + std::to_string(c) + " names another parent");
      }
      if (!node.span.contains(child.span)) {
        problems.push_back(at + ": child " + std::to_string(c) + " escapes parent span");
      }
      if (child.span.begin < prev_end) {
        problems.push_back(at + ": child " + std::to_string(c) + " overlaps its sibling");
      }
      prev_end = std::max(prev_end, child.span.end);
    }
  }
  for (NodeId id = 1; id < n; ++id) {
    if (parent_refs[id] > 1) {
      problems.push_back("node " + std::to_string(id) + " has several parents");
    }
  }
  return problems;
}

std::string node_label(const Tree &tree, NodeId id) {
  const auto &n = tree[id];
  return std::string(kind_name(n.kind)) + "@" + std::to_string(n.pos.line) + ":" +
         std::to_string(n.pos.col);
}

namespace {

std::string cfg_label(const Tree &tree, const FunctionCfg &cfg, CfgIndex i) {
  const auto &node = cfg.nodes()[i];
  switch (node.kind) {
  case CfgNode::Kind::Entry:
    return "ENTRY";
  case CfgNode::Kind::Exit:
    return "EXIT";
  case CfgNode::Kind::Stmt:
    break;
  }
  return node_label(tree, *node.stmt);
}

void dump_scope(std::ostringstream &out, const Tree &tree, const SymbolTable &st, ScopeId id,
                int depth) {
  const Scope &scope = st.scope(id);
  std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  const char *kind = scope.kind == ScopeKind::Module  ? "module"
                     : scope.kind == ScopeKind::Class ? "class"
                                                      : "function";
  out << indent << "scope " << id << " " << kind << " " << node_label(tree, scope.owner);
  if (!tree[scope.owner].name.empty()) {
    out << " '" << tree[scope.owner].name << "'";
  }
  out << "\n";
  for (const auto &[name, sym_id] : scope.symbols) {
    const Symbol &sym = st.symbol(sym_id);
    out << indent << "  symbol " << name;
    if (sym.is_parameter) {
      out << " param";
    }
    if (sym.external) {
      out << " external";
    }
    if (sym.import_path) {
      out << " import=" << *sym.import_path;
    }
    out << " defs=" << sym.defs.size() << " uses=" << sym.uses.size() << "\n";
  }
  for (ScopeId child : scope.children) {
    dump_scope(out, tree, st, child, depth + 1);
  }
}

} // namespace

std::string dump_ir(const UniIR &ir) {
  std::ostringstream out;
  const Tree &tree = ir.tree();
  out << "file " << ir.source().path() << "\n";
  if (!ir.symtab().scopes().empty()) {
    dump_scope(out, tree, ir.symtab(), 0, 0);
  }
  for (const auto &cfg : ir.cfgs()) {
    out << "cfg " << tree[cfg.function()].name << " " << node_label(tree, cfg.function())
        << " nodes=" << cfg.size() << " edges=" << cfg.edges().size() << "\n";
    for (const auto &e : cfg.edges()) {
      out << "  " << cfg_label(tree, cfg, e.from) << " -> " << cfg_label(tree, cfg, e.to) << " ["
          << edge_kind_name(e.kind) << "]\n";
    }
    for (NodeId dead : cfg.unreachable()) {
      out << "  unreachable " << node_label(tree, dead) << "\n";
    }
  }
  return out.str();
}

} // namespace graphmend
