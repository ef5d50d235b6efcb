#pragma once

#include <string>

#include "archweave/actions.hpp"
#include "archweave/condition.hpp"
#include "archweave/model.hpp"
#include "archweave/pattern.hpp"
#include "archweave/units.hpp"

// Canonical pretty-printers for every source dialect. The output is the
// round-trip normal form: 2-space indentation, one declaration per line,
// `.` after declarations, `;` after behaviour statements.

namespace archweave {

namespace detail {

struct Printer {
  std::string out;
  int depth = 0;

  void line(const std::string& s) {
    for (int i = 0; i < depth; ++i) out += "  ";
    out += s;
    out += '\n';
  }
  void open(const std::string& s) {
    line(s.empty() ? "{" : s + " {");
    ++depth;
  }
  void close(const std::string& suffix = "") {
    --depth;
    line("}" + suffix);
  }
};

inline std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

} // namespace detail

inline std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal: return detail::escape_string(e.text);
    case Expr::Kind::Var: return e.text;
    case Expr::Kind::Call: {
      std::string out = e.text + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += render_expr(e.args[i]);
      }
      return out + ")";
    }
  }
  return "?";
}

inline std::string render_stmt_inline(const Stmt& s);

namespace detail {

struct StmtPrinter {
  std::string operator()(const SendStmt& x) const {
    return "via " + x.path.text() + " send " + render_expr(x.value) + " ;";
  }
  std::string operator()(const ReceiveStmt& x) const {
    return "via " + x.path.text() + " receive " + x.var + " : " + x.type_name + " ;";
  }
  std::string operator()(const AssignStmt& x) const {
    return x.var + " := " + render_expr(x.value) + " ;";
  }
  std::string operator()(const IfStmt& x) const {
    std::string inner =
        x.then_stmt.empty() ? ";" : render_stmt_inline(x.then_stmt.front());
    return "if (serviceDown(" + x.cond.down_element + ")) " + inner;
  }
  std::string operator()(const InvokeStmt& x) const { return x.name + "() ;"; }
  std::string operator()(const ExternalStmt& x) const {
    std::string out = x.fn + "(";
    for (std::size_t i = 0; i < x.args.size(); ++i) {
      if (i) out += ", ";
      out += render_expr(x.args[i]);
    }
    return out + ") ;";
  }
  std::string operator()(const RouteAssignStmt& x) const {
    return "value " + x.route_var + " := " + x.element + " ;";
  }
};

} // namespace detail

inline std::string render_stmt_inline(const Stmt& s) {
  return std::visit(detail::StmtPrinter{}, s.node);
}

namespace detail {

inline void render_behaviour(Printer& p, const Behaviour& b) {
  for (const auto& abs : b.abstractions) {
    p.line(std::string(abs.recursive ? "recursive " : "") + "value " + abs.name +
           " is abstraction();");
    p.open("");
    for (const auto& s : abs.body) p.line(render_stmt_inline(s));
    p.close();
  }
  if (!b.compose.empty()) {
    p.open("compose");
    std::string joined;
    for (std::size_t i = 0; i < b.compose.size(); ++i) {
      if (i) joined += " and ";
      joined += b.compose[i] + "()";
    }
    p.line(joined);
    p.close();
  }
}

inline std::string element_kind_word(const ArchElement& e) {
  if (e.kind == ElementKind::Connector) return "connector";
  switch (e.role) {
    case RoleTag::Service: return "service";
    case RoleTag::GenericInterface: return "generic-interface";
    case RoleTag::Plain: return "component";
  }
  return "component";
}

inline void render_element(Printer& p, const ArchElement& e) {
  for (const auto& ann : e.annotations)
    p.line("--<" + ann.constraint_ref + "::priority:" + std::to_string(ann.priority) +
           ",range:" + std::to_string(ann.range) + ">--");
  std::string head = "archetype " + e.name + " is " + element_kind_word(e);
  if (e.weight != 1) head += " weight=" + std::to_string(e.weight);
  p.open(head);
  if (!e.type_decls.empty()) {
    p.open("types is");
    for (const auto& [n, t] : e.type_decls) p.line("type " + n + " is " + t.text() + " .");
    p.close();
  }
  if (!e.ports.empty()) {
    p.open("ports is");
    for (const auto& port : e.ports) {
      p.open("archetype " + port.name + " is port");
      if (!port.incoming.empty()) {
        p.open("incoming is");
        for (const auto& c : port.incoming)
          p.line(c.name + " is connection ( " + c.payload.text() + " ) .");
        p.close();
      }
      if (!port.outgoing.empty()) {
        p.open("outgoing is");
        for (const auto& c : port.outgoing)
          p.line(c.name + " is connection ( " + c.payload.text() + " ) .");
        p.close();
      }
      p.close();
    }
    p.close();
  }
  if (!e.children.empty()) {
    p.open("structure is");
    for (const auto& child : e.children) render_element(p, child);
    p.close();
  }
  if (e.behaviour) {
    p.open("behaviour is");
    render_behaviour(p, *e.behaviour);
    p.close();
  }
  p.close();
}

} // namespace detail

/// Canonical architecture source; parse(render(a)) is structurally equal to a.
inline std::string render(const Architecture& arch) {
  detail::Printer p;
  if (arch.style_ref == "architecture")
    p.open("archetype " + arch.name + " is architecture");
  else
    p.open(arch.name + " is " + arch.style_ref + " where");
  p.open("behaviour is");
  for (const auto& e : arch.elements) detail::render_element(p, e);
  p.close();
  if (!arch.top_links.empty()) {
    p.open("link is");
    for (const auto& l : arch.top_links) p.line("attach " + l.a + " to " + l.b + " .");
    p.close();
  }
  for (const auto& ch : arch.channels)
    p.line("unifies " + ch.from_path.text() + " with " + ch.to_path.text() + " .");
  p.close();
  if (!p.out.empty() && p.out.back() == '\n') p.out.pop_back();
  return p.out;
}

inline std::string render_action(const AtomicAction& a, int depth = 0) {
  struct V {
    int depth;
    std::string operator()(const IncludeAction& x) const {
      detail::Printer q;
      q.depth = depth;
      // reuse the element renderer, then swap the leading keyword
      detail::render_element(q, x.element);
      std::string text = q.out;
      const std::string archetype = "archetype ";
      std::size_t pos = text.find(archetype);
      if (pos != std::string::npos) text.replace(pos, archetype.size(), "include ");
      if (!text.empty() && text.back() == '\n') text.pop_back();
      return text;
    }
    std::string operator()(const ReplicateAction& x) const {
      return "replicate " + x.target.text() + " to " + x.clone_name + " ;";
    }
    std::string operator()(const UnifyAction& x) const {
      return "unify " + x.out_path.text() + " with " + x.in_path.text() + " ;";
    }
    std::string operator()(const AttachAction& x) const {
      return "attach " + x.a + " to " + x.b + " ;";
    }
    std::string operator()(const RenameAction& x) const {
      return "rename " + x.target.text() + " to " + x.new_name + " ;";
    }
    std::string operator()(const RemoveAction& x) const {
      return "remove " + x.target.text() + " ;";
    }
  };
  return std::visit(V{depth}, a.node);
}

namespace detail {

inline void render_action_block(Printer& p, const std::vector<AtomicAction>& actions) {
  for (const auto& a : actions) {
    if (std::holds_alternative<IncludeAction>(a.node)) {
      // multi-line include: splice pre-indented text
      p.out += render_action(a, p.depth);
      p.out += '\n';
    } else {
      p.line(render_action(a));
    }
  }
}

inline std::string join_conditions(const std::vector<Condition>& conds) {
  std::string out;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    if (i) out += " and ";
    out += render_condition(conds[i]);
  }
  return out;
}

} // namespace detail

inline std::string render_pattern(const ConstraintPattern& pat) {
  detail::Printer p;
  p.open(pat.name + " is " +
         (pat.kind == PatternKind::Qos ? "qualityOfServiceProperty"
                                       : "platformProperty"));
  for (const auto& block : pat.blocks) {
    p.open("on " + block.var + ":" +
           (block.scope == BlockScope::Architecture ? "architecture"
                                                    : "architecturalElement") +
           " actions");
    detail::render_action_block(p, block.actions);
    p.close();
  }
  if (!pat.provides.empty()) {
    p.open("provides is");
    p.line(detail::join_conditions(pat.provides));
    p.close();
  }
  auto name_list = [&](const char* kw, const std::vector<std::string>& names) {
    if (names.empty()) return;
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) joined += " , ";
      joined += names[i];
    }
    p.line(std::string(kw) + " is { " + joined + " }");
  };
  name_list("conflicts", pat.conflicts_with);
  name_list("requires", pat.requires_patterns);
  p.close();
  if (!p.out.empty() && p.out.back() == '\n') p.out.pop_back();
  return p.out;
}

inline std::string render_refinement_def(const RefinementDefinition& def) {
  detail::Printer p;
  std::string params;
  for (std::size_t i = 0; i < def.params.size(); ++i) {
    if (i) params += ", ";
    params += def.params[i];
  }
  p.open("on " + def.arch_var + " : architecture action " + def.name +
         " is refinement ( " + params + " )");
  if (def.pre) {
    p.open("pre is");
    p.line(render_condition(*def.pre));
    p.close();
  }
  if (def.post) {
    p.open("post is");
    p.line(render_condition(*def.post));
    p.close();
  }
  if (!def.transformation.empty()) {
    p.open("transformation is");
    detail::render_action_block(p, def.transformation);
    p.close();
  }
  p.close();
  if (!p.out.empty() && p.out.back() == '\n') p.out.pop_back();
  if (def.assuming)
    p.out += " assuming { " + render_condition(*def.assuming) + " }";
  return p.out;
}

inline std::string render_inventory(const ResourceInventory& inv) {
  detail::Printer p;
  p.open("resources " + inv.name);
  for (const auto& r : inv.resources)
    p.line("resource " + r.name + " capacity " + std::to_string(r.capacity) + " .");
  p.close();
  if (!p.out.empty() && p.out.back() == '\n') p.out.pop_back();
  return p.out;
}

inline std::string render_codegen_mapping_decl(const CodegenMappingDecl& decl) {
  detail::Printer p;
  p.open("mapping " + decl.name);
  p.line("target " + detail::escape_string(decl.target_label) + " .");
  p.line("extension " + detail::escape_string(decl.extension) + " .");
  for (const auto& [key, file] : decl.template_files)
    p.line(std::string("template ") + kind_word(key.kind) + " " + role_word(key.role) +
           " " + detail::escape_string(file) + " .");
  p.close();
  if (!p.out.empty() && p.out.back() == '\n') p.out.pop_back();
  return p.out;
}

} // namespace archweave
