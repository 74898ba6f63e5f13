#include "graphmend/cfg.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace graphmend {

std::string_view edge_kind_name(EdgeKind kind) {
  switch (kind) {
  case EdgeKind::Fallthrough:
    return "fallthrough";
  case EdgeKind::TrueBranch:
    return "true-branch";
  case EdgeKind::FalseBranch:
    return "false-branch";
  case EdgeKind::LoopBack:
    return "loop-back";
  case EdgeKind::Return:
    return "return";
  }
  return "?";
}

FunctionCfg::FunctionCfg(NodeId function) : function_(function) {
  nodes_.push_back({CfgNode::Kind::Entry, std::nullopt});
  nodes_.push_back({CfgNode::Kind::Exit, std::nullopt});
  succ_.resize(2);
  pred_.resize(2);
}

std::optional<CfgIndex> FunctionCfg::index_of(NodeId stmt) const {
  for (CfgIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].stmt == stmt) {
      return i;
    }
  }
  return std::nullopt;
}

CfgIndex FunctionCfg::add_stmt(NodeId stmt) {
  nodes_.push_back({CfgNode::Kind::Stmt, stmt});
  succ_.emplace_back();
  pred_.emplace_back();
  return static_cast<CfgIndex>(nodes_.size() - 1);
}

void FunctionCfg::add_edge(CfgIndex from, CfgIndex to, EdgeKind kind) {
  CfgEdge e{from, to, kind};
  if (std::find(edges_.begin(), edges_.end(), e) != edges_.end()) {
    return;
  }
  edges_.push_back(e);
  succ_.at(from).push_back(to);
  pred_.at(to).push_back(from);
}

std::vector<std::optional<NodeId>> FunctionCfg::stmt_ids() const {
  std::vector<std::optional<NodeId>> out;
  out.reserve(nodes_.size());
  for (const auto &n : nodes_) {
    out.push_back(n.stmt);
  }
  return out;
}

namespace {

struct Pending {
  CfgIndex from;
  EdgeKind kind;
};
using Frontier = std::vector<Pending>;

class CfgBuilder {
public:
  CfgBuilder(const Tree &tree, NodeId function) : tree_(tree), cfg_(function) {}

  FunctionCfg run() {
    auto body = tree_.body(cfg_.function());
    Frontier out{{FunctionCfg::kEntry, EdgeKind::Fallthrough}};
    if (body) {
      out = build_block(*body, std::move(out));
    }
    connect(out, FunctionCfg::kExit);
    return std::move(cfg_);
  }

private:
  struct Loop {
    CfgIndex head;
    Frontier breaks;
  };

  void connect(const Frontier &in, CfgIndex to) {
    for (const auto &p : in) {
      cfg_.add_edge(p.from, to, p.kind);
    }
  }

  void connect_back(const Frontier &in, CfgIndex head) {
    for (const auto &p : in) {
      cfg_.add_edge(p.from, head,
                    p.kind == EdgeKind::Fallthrough ? EdgeKind::LoopBack : p.kind);
    }
  }

  Frontier build_block(NodeId block, Frontier in) {
    for (NodeId stmt : tree_[block].children) {
      in = build_stmt(stmt, std::move(in));
    }
    return in;
  }

  void mark_dead(NodeId stmt) { cfg_.mark_unreachable(stmt); }

  Frontier build_stmt(NodeId stmt, Frontier in) {
    if (in.empty()) {
      mark_dead(stmt);
      return {};
    }
    const AstNode &n = tree_[stmt];
    CfgIndex idx = cfg_.add_stmt(stmt);
    connect(in, idx);

    switch (n.kind) {
    case NodeKind::If: {
      Frontier out = build_block(n.children.at(1), {{idx, EdgeKind::TrueBranch}});
      Frontier f{{idx, EdgeKind::FalseBranch}};
      if (auto orelse = tree_.orelse(stmt)) {
        if (tree_[*orelse].kind == NodeKind::If) {
          f = build_stmt(*orelse, std::move(f));
        } else {
          f = build_block(*orelse, std::move(f));
        }
      }
      out.insert(out.end(), f.begin(), f.end());
      return out;
    }
    case NodeKind::While:
    case NodeKind::For: {
      NodeId body = *tree_.body(stmt);
      loops_.push_back({idx, {}});
      Frontier body_out = build_block(body, {{idx, EdgeKind::TrueBranch}});
      connect_back(body_out, idx);
      Frontier breaks = std::move(loops_.back().breaks);
      loops_.pop_back();
      Frontier out{{idx, EdgeKind::FalseBranch}};
      if (auto orelse = tree_.orelse(stmt)) {
        out = build_block(*orelse, std::move(out));
      }
      out.insert(out.end(), breaks.begin(), breaks.end());
      return out;
    }
    case NodeKind::Try: {
      Frontier out;
      Frontier body_out;
      std::optional<NodeId> orelse;
      std::optional<NodeId> finally;
      for (NodeId c : n.children) {
        const auto &child = tree_[c];
        if (child.kind == NodeKind::Block && child.name == "body") {
          body_out = build_block(c, {{idx, EdgeKind::Fallthrough}});
        } else if (child.kind == NodeKind::ExceptHandler) {
          // Exceptions are not modeled; handlers hang off the try head.
          Frontier h = build_block(*tree_.body(c), {{idx, EdgeKind::Fallthrough}});
          out.insert(out.end(), h.begin(), h.end());
        } else if (child.kind == NodeKind::Block && child.name == "else") {
          orelse = c;
        } else if (child.kind == NodeKind::Block && child.name == "finally") {
          finally = c;
        }
      }
      if (orelse) {
        body_out = build_block(*orelse, std::move(body_out));
      }
      out.insert(out.begin(), body_out.begin(), body_out.end());
      if (finally) {
        out = build_block(*finally, std::move(out));
      }
      return out;
    }
    case NodeKind::With:
      return build_block(*tree_.body(stmt), {{idx, EdgeKind::Fallthrough}});
    case NodeKind::Return:
    case NodeKind::Raise:
      cfg_.add_edge(idx, FunctionCfg::kExit, EdgeKind::Return);
      return {};
    case NodeKind::Break:
      if (!loops_.empty()) {
        loops_.back().breaks.push_back({idx, EdgeKind::Fallthrough});
        return {};
      }
      return {{idx, EdgeKind::Fallthrough}};
    case NodeKind::Continue:
      if (!loops_.empty()) {
        cfg_.add_edge(idx, loops_.back().head, EdgeKind::LoopBack);
        return {};
      }
      return {{idx, EdgeKind::Fallthrough}};
    default:
      return {{idx, EdgeKind::Fallthrough}};
    }
  }

  const Tree &tree_;
  FunctionCfg cfg_;
  std::vector<Loop> loops_;
};

void count_block(const Tree &tree, NodeId block, std::size_t &count);

void count_stmt(const Tree &tree, NodeId stmt, std::size_t &count) {
  ++count;
  const auto &n = tree[stmt];
  if (n.kind == NodeKind::FunctionDef || n.kind == NodeKind::ClassDef) {
    return;
  }
  for (NodeId c : n.children) {
    const auto &child = tree[c];
    if (child.kind == NodeKind::Block) {
      count_block(tree, c, count);
    } else if (child.kind == NodeKind::ExceptHandler) {
      count_block(tree, *tree.body(c), count);
    } else if (child.kind == NodeKind::If && n.kind == NodeKind::If) {
      count_stmt(tree, c, count); // elif arm
    }
  }
}

void count_block(const Tree &tree, NodeId block, std::size_t &count) {
  for (NodeId s : tree[block].children) {
    count_stmt(tree, s, count);
  }
}

} // namespace

std::vector<FunctionCfg> build_cfgs(const Tree &tree) {
  std::vector<NodeId> functions;
  tree.walk(tree.root(), [&](NodeId id) {
    if (tree[id].kind == NodeKind::FunctionDef) {
      functions.push_back(id);
    }
    return true;
  });
  std::vector<FunctionCfg> out;
  out.reserve(functions.size());
  for (NodeId f : functions) {
    out.push_back(build_function_cfg(tree, f));
  }
  return out;
}

FunctionCfg build_function_cfg(const Tree &tree, NodeId function) {
  return CfgBuilder(tree, function).run();
}

Dominators::Dominators(const FunctionCfg &cfg) {
  const std::size_t n = cfg.size();
  dom_.assign(n, std::vector<bool>(n, true));
  dom_[FunctionCfg::kEntry].assign(n, false);
  dom_[FunctionCfg::kEntry][FunctionCfg::kEntry] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (CfgIndex b = 0; b < n; ++b) {
      if (b == FunctionCfg::kEntry) {
        continue;
      }
      const auto &preds = cfg.predecessors(b);
      if (preds.empty()) {
        continue;
      }
      std::vector<bool> next(n, true);
      for (CfgIndex p : preds) {
        for (std::size_t i = 0; i < n; ++i) {
          next[i] = next[i] && dom_[p][i];
        }
      }
      next[b] = true;
      if (next != dom_[b]) {
        dom_[b] = std::move(next);
        changed = true;
      }
    }
  }
}

bool Dominators::dominates(CfgIndex a, CfgIndex b) const { return dom_.at(b).at(a); }

bool dominates(const FunctionCfg &cfg, CfgIndex a, CfgIndex b) {
  return Dominators(cfg).dominates(a, b);
}

std::vector<CfgIndex> worklist_order(const FunctionCfg &cfg) {
  std::vector<CfgIndex> order;
  std::vector<bool> seen(cfg.size(), false);
  std::deque<CfgIndex> worklist;
  for (CfgIndex s : cfg.successors(FunctionCfg::kEntry)) {
    if (!seen[s]) {
      seen[s] = true;
      worklist.push_back(s);
    }
  }
  while (!worklist.empty()) {
    CfgIndex n = worklist.front();
    worklist.pop_front();
    order.push_back(n);
    for (CfgIndex s : cfg.successors(n)) {
      if (!seen[s]) {
        seen[s] = true;
        worklist.push_back(s);
      }
    }
  }
  return order;
}

std::vector<std::string> verify_cfg(const Tree &tree, const FunctionCfg &cfg) {
  std::vector<std::string> problems;
  std::string where = "cfg of '" + tree[cfg.function()].name + "': ";
  if (!cfg.predecessors(FunctionCfg::kEntry).empty()) {
    problems.push_back(where + "ENTRY has predecessors");
  }
  if (!cfg.successors(FunctionCfg::kExit).empty()) {
    problems.push_back(where + "EXIT has successors");
  }
  for (const auto &e : cfg.edges()) {
    if (e.kind == EdgeKind::Return && e.to != FunctionCfg::kExit) {
      problems.push_back(where + "return edge does not target EXIT");
    }
  }
  std::vector<bool> reach(cfg.size(), false);
  std::vector<CfgIndex> stack{FunctionCfg::kEntry};
  reach[FunctionCfg::kEntry] = true;
  while (!stack.empty()) {
    CfgIndex n = stack.back();
    stack.pop_back();
    for (CfgIndex s : cfg.successors(n)) {
      if (!reach[s]) {
        reach[s] = true;
        stack.push_back(s);
      }
    }
  }
  std::set<NodeId> seen;
  for (CfgIndex i = 0; i < cfg.size(); ++i) {
    const auto &node = cfg.nodes()[i];
    if (node.kind == CfgNode::Kind::Stmt) {
      if (!reach[i]) {
        problems.push_back(where + "statement at line " +
                           std::to_string(tree[*node.stmt].pos.line) +
                           " unreachable from ENTRY");
      }
      if (*node.stmt >= tree.size() || !is_statement(tree[*node.stmt].kind)) {
        problems.push_back(where + "cfg node does not reference a statement");
      }
      if (!seen.insert(*node.stmt).second) {
        problems.push_back(where + "statement modeled twice");
      }
    }
  }
  return problems;
}

std::size_t modeled_statement_count(const Tree &tree, NodeId function) {
  std::size_t count = 0;
  if (auto body = tree.body(function)) {
    count_block(tree, *body, count);
  }
  return count;
}

} // namespace graphmend
