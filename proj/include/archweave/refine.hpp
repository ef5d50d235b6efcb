#pragma once

#include <map>
#include <string>
#include <vector>

#include "archweave/actions.hpp"
#include "archweave/condition.hpp"
#include "archweave/model.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Atomic action application
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void precondition_failed(const std::string& verb,
                                             const std::string& what) {
  throw Error("precondition-failed", verb + ", " + what);
}

inline void strip_annotations(ArchElement& e) {
  e.annotations.clear();
  for (auto& c : e.children) strip_annotations(c);
}

/// Rewrites a stored path after the node at `old_prefix` was renamed. Only
/// the segment at the prefix boundary changes.
inline void rename_in_path(ElementPath& p, const ElementPath& old_prefix,
                           const std::string& new_name) {
  if (p.segments.size() < old_prefix.segments.size()) return;
  for (std::size_t i = 0; i < old_prefix.segments.size(); ++i)
    if (p.segments[i] != old_prefix.segments[i]) return;
  p.segments[old_prefix.segments.size() - 1] = new_name;
}

inline void rename_in_stmts(std::vector<Stmt>& stmts, const ElementPath& scoped,
                            const std::string& new_name) {
  for (auto& s : stmts) {
    if (auto* snd = std::get_if<SendStmt>(&s.node))
      rename_in_path(snd->path, scoped, new_name);
    else if (auto* rcv = std::get_if<ReceiveStmt>(&s.node))
      rename_in_path(rcv->path, scoped, new_name);
    else if (auto* branch = std::get_if<IfStmt>(&s.node))
      rename_in_stmts(branch->then_stmt, scoped, new_name);
  }
}

inline bool path_goes_through(const ElementPath& p, const ElementPath& prefix) {
  if (p.segments.size() < prefix.segments.size()) return false;
  for (std::size_t i = 0; i < prefix.segments.size(); ++i)
    if (p.segments[i] != prefix.segments[i]) return false;
  return true;
}

} // namespace detail

/// Applies one atomic action, returning a fresh architecture; the input is
/// never mutated. Throws Error("precondition-failed", ...) on violated
/// preconditions and Error("postcondition-failed", ...) when the result
/// would not validate.
inline Architecture apply_action(const Architecture& arch, const AtomicAction& action) {
  Architecture out = arch;

  struct V {
    Architecture& out;
    const Architecture& in;

    void operator()(const IncludeAction& a) const {
      if (in.find_element(a.element.name))
        detail::precondition_failed("include", "name-in-use " + a.element.name);
      out.elements.push_back(a.element);
    }

    void operator()(const ReplicateAction& a) const {
      if (a.target.segments.size() != 1)
        detail::precondition_failed("replicate", "target must be top-level");
      const ArchElement* src = in.find_element(a.target.front());
      if (!src)
        detail::precondition_failed("replicate", "unresolved " + a.target.text());
      if (in.find_element(a.clone_name))
        detail::precondition_failed("replicate", "name-in-use " + a.clone_name);
      ArchElement clone = *src;
      clone.name = a.clone_name;
      // replicas must not re-trigger planning
      detail::strip_annotations(clone);
      out.elements.push_back(std::move(clone));
    }

    void operator()(const UnifyAction& a) const {
      ModelNode from, to;
      try {
        from = resolve(in, a.out_path);
      } catch (const Error&) {
        detail::precondition_failed("unify", "unresolved " + a.out_path.text());
      }
      try {
        to = resolve(in, a.in_path);
      } catch (const Error&) {
        detail::precondition_failed("unify", "unresolved " + a.in_path.text());
      }
      if (!from.is_connection() || !to.is_connection())
        detail::precondition_failed("unify", "endpoint is not a connection");
      if (from.connection->direction != Direction::Outgoing ||
          to.connection->direction != Direction::Incoming)
        detail::precondition_failed("unify", "direction");
      if (!(from.connection->payload == to.connection->payload))
        detail::precondition_failed("unify", "payload mismatch " +
                                                 from.connection->payload.text() +
                                                 " vs " + to.connection->payload.text());
      out.channels.push_back(Channel{a.out_path, a.in_path});
    }

    void operator()(const AttachAction& a) const {
      if (!in.find_element(a.a))
        detail::precondition_failed("attach", "unresolved " + a.a);
      if (!in.find_element(a.b))
        detail::precondition_failed("attach", "unresolved " + a.b);
      out.top_links.push_back(Attachment{a.a, a.b});
    }

    void operator()(const RenameAction& a) const {
      if (a.target.empty())
        detail::precondition_failed("rename", "empty path");
      ModelNode node;
      try {
        node = resolve(in, a.target);
      } catch (const Error&) {
        detail::precondition_failed("rename", "unresolved " + a.target.text());
      }
      if (!node.is_element())
        detail::precondition_failed("rename", "target must be an element");

      // the new name must be free at the target's nesting level
      if (a.target.segments.size() == 1) {
        if (in.find_element(a.new_name))
          detail::precondition_failed("rename", "name-in-use");
      } else {
        ElementPath parent = a.target;
        parent.segments.pop_back();
        ModelNode pn = resolve(in, parent);
        if (pn.element->find_child(a.new_name))
          detail::precondition_failed("rename", "name-in-use");
      }

      // rename the node itself
      ArchElement* cursor = out.find_element(a.target.front());
      for (std::size_t i = 1; i < a.target.segments.size(); ++i) {
        for (auto& c : cursor->children)
          if (c.name == a.target.segments[i]) {
            cursor = &c;
            break;
          }
      }
      cursor->name = a.new_name;

      // reference integrity: channels, attachments, behaviour via-paths
      for (auto& ch : out.channels) {
        detail::rename_in_path(ch.from_path, a.target, a.new_name);
        detail::rename_in_path(ch.to_path, a.target, a.new_name);
      }
      if (a.target.segments.size() == 1) {
        for (auto& l : out.top_links) {
          if (l.a == a.target.front()) l.a = a.new_name;
          if (l.b == a.target.front()) l.b = a.new_name;
        }
      } else {
        // via-paths are element-relative; only renames inside an element can
        // affect them
        ElementPath scoped(std::vector<std::string>(a.target.segments.begin() + 1,
                                                    a.target.segments.end()));
        ArchElement* owner = out.find_element(a.target.front());
        if (owner && owner->behaviour)
          for (auto& abs : owner->behaviour->abstractions)
            detail::rename_in_stmts(abs.body, scoped, a.new_name);
      }
    }

    void operator()(const RemoveAction& a) const {
      ModelNode node;
      try {
        node = resolve(in, a.target);
      } catch (const Error&) {
        detail::precondition_failed("remove", "unresolved " + a.target.text());
      }
      if (!node.is_element())
        detail::precondition_failed("remove", "target must be an element");

      // drop channels and attachments incident to the removed subtree
      std::vector<Channel> kept;
      for (const auto& ch : out.channels)
        if (!detail::path_goes_through(ch.from_path, a.target) &&
            !detail::path_goes_through(ch.to_path, a.target))
          kept.push_back(ch);
      out.channels = std::move(kept);
      if (a.target.segments.size() == 1) {
        std::vector<Attachment> links;
        for (const auto& l : out.top_links)
          if (l.a != a.target.front() && l.b != a.target.front())
            links.push_back(l);
        out.top_links = std::move(links);
        std::vector<ArchElement> elems;
        for (auto& e : out.elements)
          if (e.name != a.target.front()) elems.push_back(std::move(e));
        out.elements = std::move(elems);
      } else {
        ElementPath parent = a.target;
        parent.segments.pop_back();
        ArchElement* cursor = out.find_element(parent.front());
        for (std::size_t i = 1; i < parent.segments.size(); ++i)
          for (auto& c : cursor->children)
            if (c.name == parent.segments[i]) {
              cursor = &c;
              break;
            }
        std::vector<ArchElement> kept_children;
        for (auto& c : cursor->children)
          if (c.name != a.target.segments.back()) kept_children.push_back(std::move(c));
        cursor->children = std::move(kept_children);
      }
    }
  };

  std::visit(V{out, arch}, action.node);

  Diagnostics diags = validate(out);
  if (!diags.empty()) {
    std::string detail = action.verb();
    for (const auto& d : diags) detail += "; " + d.rule + " at " + d.path.text();
    throw Error("postcondition-failed", detail);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement execution
// ---------------------------------------------------------------------------

/// Runs a refinement definition with positional path arguments bound to its
/// parameters. All-or-nothing: on any failure the exception carries the
/// failing condition/action and the caller's architecture is untouched.
inline Architecture execute_refinement(const Architecture& arch,
                                       const RefinementDefinition& def,
                                       const std::vector<ElementPath>& args) {
  if (args.size() != def.params.size())
    throw Error("precondition-failed",
                def.name + ", arity: expected " + std::to_string(def.params.size()) +
                    " arguments, got " + std::to_string(args.size()));

  Bindings bindings;
  for (std::size_t i = 0; i < def.params.size(); ++i)
    bindings.push_back({def.params[i], args[i].text(), false});

  if (def.pre) {
    Condition bound = substitute(*def.pre, bindings);
    if (!eval_condition(arch, bound))
      throw Error("precondition-failed", def.name + ", " + render_condition(bound));
  }
  if (def.assuming) {
    Condition bound = substitute(*def.assuming, bindings);
    if (!eval_condition(arch, bound))
      throw Error("assumption-failed", def.name + ", " + render_condition(bound));
  }

  Architecture result = arch;
  for (const auto& templ : def.transformation)
    result = apply_action(result, substitute(templ, bindings));

  if (def.post) {
    Condition bound = substitute(*def.post, bindings);
    if (!eval_condition(result, bound))
      throw Error("postcondition-failed", def.name + ", " + render_condition(bound));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Property preservation
// ---------------------------------------------------------------------------

struct PreservationReport {
  std::vector<std::pair<Condition, bool>> checked;
  bool passed = true;
};

/// Derives the structural property set of `abstract` and evaluates it on
/// `concrete`. Renames recorded during refinement are honored through
/// `name_map` (old top-level name -> new name).
inline PreservationReport verify_preservation(
    const Architecture& abstract, const Architecture& concrete,
    const std::map<std::string, std::string>& name_map = {}) {
  Bindings bindings;
  for (const auto& [old_name, new_name] : name_map)
    bindings.push_back({old_name, new_name, false});

  std::vector<Condition> properties;
  for (const auto& e : abstract.elements) properties.push_back(Condition::exists(e.name));
  for (const auto& l : abstract.top_links)
    properties.push_back(Condition::attached(l.a, l.b));
  for (const auto& ch : abstract.channels)
    properties.push_back(Condition::channel_between(ch.from_path, ch.to_path));

  PreservationReport report;
  for (auto& prop : properties) {
    Condition mapped = substitute(prop, bindings);
    bool verdict = eval_condition(concrete, mapped);
    report.passed = report.passed && verdict;
    report.checked.emplace_back(std::move(mapped), verdict);
  }
  return report;
}

/// Line-oriented report: one `PASS|FAIL <condition>` per property, then a
/// final `RESULT` line.
inline std::string render_preservation_report(const PreservationReport& report) {
  std::string out;
  for (const auto& [cond, verdict] : report.checked)
    out += std::string(verdict ? "PASS " : "FAIL ") + render_condition(cond) + "\n";
  out += std::string("RESULT ") + (report.passed ? "PASS" : "FAIL") + "\n";
  return out;
}

} // namespace archweave
