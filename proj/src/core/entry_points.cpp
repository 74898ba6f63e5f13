#include "graphmend/analysis.hpp"

#include <algorithm>

namespace graphmend {

std::string_view mechanism_name(EntryMechanism m) {
  switch (m) {
  case EntryMechanism::Decorator:
    return "decorator";
  case EntryMechanism::CallWrap:
    return "call-wrap";
  case EntryMechanism::ModuleCompile:
    return "module-compile";
  }
  return "?";
}

std::optional<std::string> root_import_path(const UniIR &ir, NodeId expr) {
  auto root = chain_root(ir.tree(), expr);
  if (!root) {
    return std::nullopt;
  }
  auto sym = ir.symtab().symbol_of(*root);
  if (!sym) {
    return std::nullopt;
  }
  return ir.symtab().symbol(*sym).import_path;
}

std::optional<std::string> resolved_path(const UniIR &ir, NodeId expr) {
  auto dotted = dotted_name(ir.tree(), expr);
  if (!dotted) {
    return std::nullopt;
  }
  auto import = root_import_path(ir, expr);
  if (!import) {
    return dotted;
  }
  auto dot = dotted->find('.');
  return dot == std::string::npos ? *import : *import + dotted->substr(dot);
}

bool rooted_at_torch(const UniIR &ir, NodeId expr) {
  auto path = root_import_path(ir, expr);
  return path && (*path == "torch" || path->starts_with("torch."));
}

namespace {

// torch.cuda.is_available(), torch.get_default_dtype() and friends answer
// host-side questions and never produce tensors.
bool is_host_query(const Tree &tree, NodeId func) {
  const auto &f = tree[func];
  if (f.kind != NodeKind::Attribute && f.kind != NodeKind::Name) {
    return false;
  }
  return f.name.starts_with("is_") || f.name.starts_with("get_");
}

} // namespace

bool contains_torch_call(const UniIR &ir, NodeId expr) {
  const Tree &tree = ir.tree();
  bool found = false;
  tree.walk(expr, [&](NodeId id) {
    if (found || tree[id].kind == NodeKind::Lambda) {
      return false;
    }
    if (tree[id].kind == NodeKind::Call) {
      NodeId func = tree[id].children.at(0);
      if (rooted_at_torch(ir, func) && !is_host_query(tree, func)) {
        found = true;
        return false;
      }
    }
    return true;
  });
  return found;
}

std::vector<NodeId> value_uses(const Tree &tree, const TorchAttrTable &attrs, NodeId expr) {
  std::vector<NodeId> uses;
  tree.walk(expr, [&](NodeId id) {
    const AstNode &n = tree[id];
    switch (n.kind) {
    case NodeKind::Name:
      if (n.ctx == ExprCtx::Load) {
        uses.push_back(id);
      }
      return false;
    case NodeKind::Attribute:
      return !attrs.is_static(n.name);
    case NodeKind::Call: {
      const AstNode &func = tree[n.children.at(0)];
      static const std::set<std::string> kIntrospection = {"isinstance", "hasattr", "len",
                                                            "type", "callable", "id"};
      return !(func.kind == NodeKind::Name && kIntrospection.contains(func.name));
    }
    case NodeKind::Compare:
      return !std::all_of(n.ops.begin(), n.ops.end(),
                          [](const std::string &op) { return op == "is" || op == "is not"; });
    case NodeKind::Lambda:
      return false;
    default:
      return true;
    }
  });
  return uses;
}

namespace {

std::string call_args_source(const UniIR &ir, NodeId call) {
  const Tree &tree = ir.tree();
  const auto &c = tree[call];
  NodeId func = c.children.at(0);
  std::string_view text = ir.source().slice({tree[func].span.end, c.span.end});
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close <= open) {
    return {};
  }
  return std::string(text.substr(open + 1, close - open - 1));
}

bool is_torch_compile(const UniIR &ir, NodeId expr) {
  return resolved_path(ir, expr) == "torch.compile";
}

std::optional<NodeId> method_named(const Tree &tree, NodeId cls, const std::string &name) {
  auto body = tree.body(cls);
  if (!body) {
    return std::nullopt;
  }
  for (NodeId s : tree[*body].children) {
    if (tree[s].kind == NodeKind::FunctionDef && tree[s].name == name) {
      return s;
    }
  }
  return std::nullopt;
}

// Same-file ClassDef that a Name resolves to.
std::optional<NodeId> class_of_name(const UniIR &ir, NodeId name) {
  auto sym = ir.symtab().symbol_of(name);
  if (!sym) {
    return std::nullopt;
  }
  for (NodeId d : ir.symtab().symbol(*sym).defs) {
    if (ir.tree()[d].kind == NodeKind::ClassDef) {
      return d;
    }
  }
  return std::nullopt;
}

// Class instantiated by `expr` when it is `Cls(...)` for a same-file class.
std::optional<NodeId> instantiated_class(const UniIR &ir, NodeId expr) {
  const Tree &tree = ir.tree();
  if (tree[expr].kind != NodeKind::Call) {
    return std::nullopt;
  }
  NodeId func = tree[expr].children.at(0);
  if (tree[func].kind != NodeKind::Name) {
    return std::nullopt;
  }
  return class_of_name(ir, func);
}

} // namespace

std::vector<EntryPoint> find_entry_points(const UniIR &ir) {
  const Tree &tree = ir.tree();
  std::vector<EntryPoint> found;

  auto add_module = [&](NodeId cls, NodeId call) {
    if (auto fwd = method_named(tree, cls, "forward")) {
      found.push_back({*fwd, EntryMechanism::ModuleCompile, call_args_source(ir, call), call});
    }
  };

  tree.walk(tree.root(), [&](NodeId id) {
    const AstNode &n = tree[id];
    if (n.kind == NodeKind::Decorator) {
      NodeId expr = n.children.at(0);
      NodeId fn = *n.parent;
      if (tree[fn].kind == NodeKind::FunctionDef) {
        if (is_torch_compile(ir, expr)) {
          found.push_back({fn, EntryMechanism::Decorator, "", id});
        } else if (tree[expr].kind == NodeKind::Call &&
                   is_torch_compile(ir, tree[expr].children.at(0))) {
          found.push_back({fn, EntryMechanism::Decorator, call_args_source(ir, expr), id});
        }
      }
      return false;
    }
    if (n.kind != NodeKind::Call || !is_torch_compile(ir, n.children.at(0)) ||
        n.children.size() < 2) {
      return true;
    }
    NodeId arg = n.children.at(1);
    const AstNode &a = tree[arg];
    if (a.kind == NodeKind::Call) {
      if (auto cls = instantiated_class(ir, arg)) {
        add_module(*cls, id);
      }
      return true;
    }
    if (a.kind != NodeKind::Name) {
      return true;
    }
    auto sym = ir.symtab().symbol_of(arg);
    if (!sym) {
      return true;
    }
    bool bound = n.parent && tree[*n.parent].kind == NodeKind::Assign;
    for (NodeId d : ir.symtab().symbol(*sym).defs) {
      const AstNode &def = tree[d];
      if (def.kind == NodeKind::FunctionDef && bound) {
        found.push_back({d, EntryMechanism::CallWrap, call_args_source(ir, id), id});
      } else if (def.kind == NodeKind::ClassDef) {
        add_module(d, id);
      } else if (def.kind == NodeKind::Name && def.parent &&
                 tree[*def.parent].kind == NodeKind::Assign) {
        NodeId value = tree[*def.parent].children.back();
        if (value != d) {
          if (auto cls = instantiated_class(ir, value)) {
            add_module(*cls, id);
          }
        }
      }
    }
    return true;
  });

  std::stable_sort(found.begin(), found.end(), [&](const EntryPoint &a, const EntryPoint &b) {
    return tree[a.function].span.begin < tree[b.function].span.begin;
  });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const EntryPoint &a, const EntryPoint &b) {
                            return a.function == b.function;
                          }),
              found.end());
  return found;
}

} // namespace graphmend
