#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "archweave/condition.hpp"
#include "archweave/model.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Atomic refinement actions
// ---------------------------------------------------------------------------

struct IncludeAction {
  ArchElement element;
  bool operator==(const IncludeAction&) const = default;
};
struct ReplicateAction {
  ElementPath target;
  std::string clone_name;
  bool operator==(const ReplicateAction&) const = default;
};
struct UnifyAction {
  ElementPath out_path;
  ElementPath in_path;
  bool operator==(const UnifyAction&) const = default;
};
struct AttachAction {
  std::string a;
  std::string b;
  bool operator==(const AttachAction&) const = default;
};
struct RenameAction {
  ElementPath target;
  std::string new_name;
  bool operator==(const RenameAction&) const = default;
};
struct RemoveAction {
  ElementPath target;
  bool operator==(const RemoveAction&) const = default;
};

struct AtomicAction {
  std::variant<IncludeAction, ReplicateAction, UnifyAction, AttachAction,
               RenameAction, RemoveAction>
      node;

  bool operator==(const AtomicAction&) const = default;

  std::string verb() const {
    struct V {
      std::string operator()(const IncludeAction&) const { return "include"; }
      std::string operator()(const ReplicateAction&) const { return "replicate"; }
      std::string operator()(const UnifyAction&) const { return "unify"; }
      std::string operator()(const AttachAction&) const { return "attach"; }
      std::string operator()(const RenameAction&) const { return "rename"; }
      std::string operator()(const RemoveAction&) const { return "remove"; }
    };
    return std::visit(V{}, node);
  }
};

inline const std::vector<std::string>& action_verbs() {
  static const std::vector<std::string> verbs = {"include", "replicate", "unify",
                                                 "attach", "rename", "remove"};
  return verbs;
}

// ---------------------------------------------------------------------------
// Refinement definitions (the `.refd` dialect)
// ---------------------------------------------------------------------------

/// A named, parameterised refinement: optional pre/post conditions around an
/// atomic-action transformation, plus an optional environment assumption
/// evaluated on the pre-state.
struct RefinementDefinition {
  std::string name;
  std::string arch_var = "a";
  std::vector<std::string> params;
  std::optional<Condition> pre;
  std::optional<Condition> post;
  std::vector<AtomicAction> transformation;
  std::optional<Condition> assuming;

  bool operator==(const RefinementDefinition&) const = default;
};

// ---------------------------------------------------------------------------
// Identifier substitution
// ---------------------------------------------------------------------------

/// Binding of a template/parameter variable to a concrete name. When
/// `prefix_allowed` is set, an identifier that starts with the variable and
/// continues at a camel-case or digit boundary is rewritten too, so a pattern
/// can derive names from its scope variable (e.g. `bClone0` for variable `b`).
struct VarBinding {
  std::string var;
  std::string replacement;
  bool prefix_allowed = false;
};

using Bindings = std::vector<VarBinding>;

namespace detail {

inline bool subst_ident(std::string& ident, const Bindings& bindings) {
  for (const auto& b : bindings) {
    if (ident == b.var) {
      ident = b.replacement;
      return true;
    }
    if (b.prefix_allowed && ident.size() > b.var.size() &&
        ident.compare(0, b.var.size(), b.var) == 0) {
      char boundary = ident[b.var.size()];
      if (std::isupper(static_cast<unsigned char>(boundary)) ||
          std::isdigit(static_cast<unsigned char>(boundary))) {
        ident = b.replacement + ident.substr(b.var.size());
        return true;
      }
    }
  }
  return false;
}

inline void subst_path(ElementPath& path, const Bindings& bindings) {
  std::vector<std::string> out;
  for (auto& seg : path.segments) {
    std::string s = seg;
    if (subst_ident(s, bindings) && s.find("::") != std::string::npos) {
      ElementPath spliced = ElementPath::parse(s);
      out.insert(out.end(), spliced.segments.begin(), spliced.segments.end());
    } else {
      out.push_back(s);
    }
  }
  path.segments = std::move(out);
}

inline void subst_expr(Expr& e, const Bindings& bindings) {
  if (e.kind == Expr::Kind::Var) subst_ident(e.text, bindings);
  for (auto& a : e.args) subst_expr(a, bindings);
}

inline void subst_stmt(Stmt& s, const Bindings& bindings);

inline void subst_stmts(std::vector<Stmt>& stmts, const Bindings& bindings) {
  for (auto& s : stmts) subst_stmt(s, bindings);
}

inline void subst_stmt(Stmt& s, const Bindings& bindings) {
  struct V {
    const Bindings& b;
    void operator()(SendStmt& x) const {
      subst_path(x.path, b);
      subst_expr(x.value, b);
    }
    void operator()(ReceiveStmt& x) const { subst_path(x.path, b); }
    void operator()(AssignStmt& x) const { subst_expr(x.value, b); }
    void operator()(IfStmt& x) const {
      subst_ident(x.cond.down_element, b);
      subst_stmts(x.then_stmt, b);
    }
    void operator()(InvokeStmt&) const {}
    void operator()(ExternalStmt& x) const {
      for (auto& a : x.args) subst_expr(a, b);
    }
    void operator()(RouteAssignStmt& x) const { subst_ident(x.element, b); }
  };
  std::visit(V{bindings}, s.node);
}

inline void subst_element(ArchElement& elem, const Bindings& bindings) {
  subst_ident(elem.name, bindings);
  if (elem.behaviour) {
    for (auto& abs : elem.behaviour->abstractions) subst_stmts(abs.body, bindings);
  }
  for (auto& child : elem.children) subst_element(child, bindings);
}

} // namespace detail

inline std::string substitute(std::string ident, const Bindings& bindings) {
  detail::subst_ident(ident, bindings);
  return ident;
}

inline ElementPath substitute(ElementPath path, const Bindings& bindings) {
  detail::subst_path(path, bindings);
  return path;
}

inline Condition substitute(Condition cond, const Bindings& bindings) {
  for (auto& id : cond.idents) detail::subst_ident(id, bindings);
  detail::subst_path(cond.path_a, bindings);
  detail::subst_path(cond.path_b, bindings);
  for (auto& k : cond.kids) k = substitute(std::move(k), bindings);
  return cond;
}

inline AtomicAction substitute(AtomicAction action, const Bindings& bindings) {
  struct V {
    const Bindings& b;
    void operator()(IncludeAction& x) const { detail::subst_element(x.element, b); }
    void operator()(ReplicateAction& x) const {
      detail::subst_path(x.target, b);
      detail::subst_ident(x.clone_name, b);
    }
    void operator()(UnifyAction& x) const {
      detail::subst_path(x.out_path, b);
      detail::subst_path(x.in_path, b);
    }
    void operator()(AttachAction& x) const {
      detail::subst_ident(x.a, b);
      detail::subst_ident(x.b, b);
    }
    void operator()(RenameAction& x) const {
      detail::subst_path(x.target, b);
      detail::subst_ident(x.new_name, b);
    }
    void operator()(RemoveAction& x) const { detail::subst_path(x.target, b); }
  };
  std::visit(V{bindings}, action.node);
  return action;
}

} // namespace archweave
