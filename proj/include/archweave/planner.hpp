#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "archweave/patterns.hpp"
#include "archweave/refine.hpp"
#include "archweave/render.hpp"

#include "json.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Constraint mappings
// ---------------------------------------------------------------------------

/// One annotation lifted off the model: which element wants which pattern,
/// how urgently, and with what scope radius. decl_index is the global
/// textual position, used for deterministic tie-breaking.
struct ConstraintMapping {
  std::string element;
  std::string constraint_ref;
  int priority = 1;
  int range = 1;
  int decl_index = 0;

  bool operator==(const ConstraintMapping&) const = default;
};

/// Mappings in textual order: top-level elements in declaration order, each
/// element's annotations in written order.
inline std::vector<ConstraintMapping> extract_mappings(const Architecture& arch) {
  std::vector<ConstraintMapping> out;
  int index = 0;
  for (const auto& elem : arch.elements)
    for (const auto& ann : elem.annotations)
      out.push_back({elem.name, ann.constraint_ref, ann.priority, ann.range, index++});
  return out;
}

inline std::vector<std::string> unknown_constraint_refs(
    const std::vector<ConstraintMapping>& mappings, const PatternLibrary& lib) {
  std::vector<std::string> out;
  for (const auto& m : mappings)
    if (!lib.find(m.constraint_ref)) out.push_back(m.constraint_ref);
  return out;
}

/// The elements a mapping's pattern may touch: the target plus everything
/// within range-1 channel/attachment hops. Architecture-scope actions and
/// plan-introduced elements are exempt from this set.
inline std::set<std::string> mapping_scope(const Architecture& arch,
                                           const ConstraintMapping& m) {
  std::set<std::string> scope = neighbors(arch, m.element, m.range - 1);
  scope.insert(m.element);
  return scope;
}

// ---------------------------------------------------------------------------
// Compatibility checking
// ---------------------------------------------------------------------------

/// A detected incompatibility: two conflicting mappings with overlapping
/// scopes, or a mapping whose required partner pattern is absent
/// (index_b = -1 in that case).
struct Conflict {
  int index_a = 0;
  int index_b = -1;
  std::string pattern_a;
  std::string pattern_b;
  std::string reason;

  bool operator==(const Conflict&) const = default;
};

inline std::string render_conflict(const Conflict& c) {
  if (c.index_b < 0)
    return "mapping " + std::to_string(c.index_a) + " (" + c.pattern_a +
           ") requires absent pattern " + c.pattern_b;
  return "mappings " + std::to_string(c.index_a) + " (" + c.pattern_a + ") and " +
         std::to_string(c.index_b) + " (" + c.pattern_b + ") conflict: " + c.reason;
}

inline std::vector<Conflict> check_compatibility(
    const Architecture& arch, const std::vector<ConstraintMapping>& mappings,
    const PatternLibrary& lib) {
  std::vector<Conflict> out;
  std::vector<std::set<std::string>> scopes;
  scopes.reserve(mappings.size());
  for (const auto& m : mappings) scopes.push_back(mapping_scope(arch, m));

  for (std::size_t i = 0; i < mappings.size(); ++i) {
    for (std::size_t j = i + 1; j < mappings.size(); ++j) {
      if (lib.relation(mappings[i].constraint_ref, mappings[j].constraint_ref) !=
          Relation::Conflicts)
        continue;
      std::vector<std::string> overlap;
      std::set_intersection(scopes[i].begin(), scopes[i].end(), scopes[j].begin(),
                            scopes[j].end(), std::back_inserter(overlap));
      if (!overlap.empty())
        out.push_back({static_cast<int>(i), static_cast<int>(j),
                       mappings[i].constraint_ref, mappings[j].constraint_ref,
                       "overlapping scope at " + overlap.front()});
    }
  }
  for (std::size_t i = 0; i < mappings.size(); ++i) {
    for (const auto& needed : lib.required_by(mappings[i].constraint_ref)) {
      bool present = false;
      for (const auto& other : mappings)
        if (other.constraint_ref == needed) present = true;
      if (!present)
        out.push_back({static_cast<int>(i), -1, mappings[i].constraint_ref, needed,
                       "missing required pattern"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

struct PlanStep {
  std::string pattern;
  std::string target;
  int priority = 1;
  int decl_index = 0;
  PatternKind kind = PatternKind::Qos;
  std::vector<AtomicAction> actions;
  std::set<std::string> scope_set;

  bool operator==(const PlanStep&) const = default;
};

struct TransformationPlan {
  std::vector<PlanStep> steps;
  bool operator==(const TransformationPlan&) const = default;
};

namespace detail {

/// Elements an action refers to that must already exist when it runs.
inline std::vector<std::string> referenced_elements(const AtomicAction& a) {
  struct V {
    std::vector<std::string> out;
    void operator()(const IncludeAction&) {}
    void operator()(const ReplicateAction& x) { out.push_back(x.target.front()); }
    void operator()(const UnifyAction& x) {
      out.push_back(x.out_path.front());
      out.push_back(x.in_path.front());
    }
    void operator()(const AttachAction& x) {
      out.push_back(x.a);
      out.push_back(x.b);
    }
    void operator()(const RenameAction& x) { out.push_back(x.target.front()); }
    void operator()(const RemoveAction& x) { out.push_back(x.target.front()); }
  };
  V v;
  std::visit(v, a.node);
  return v.out;
}

inline std::vector<std::string> action_introduced(const AtomicAction& a) {
  if (const auto* inc = std::get_if<IncludeAction>(&a.node))
    return {inc->element.name};
  if (const auto* rep = std::get_if<ReplicateAction>(&a.node))
    return {rep->clone_name};
  return {};
}

} // namespace detail

/// Builds the plan for an explicit mapping list (the pipeline uses this for
/// platform adaptation, where the mapping is synthesized rather than
/// annotated). Mappings are ordered by (priority, decl_index); instantiation
/// is checked against the scope rule.
inline TransformationPlan plan_for_mappings(const Architecture& arch,
                                            const PatternLibrary& lib,
                                            std::vector<ConstraintMapping> mappings) {
  std::stable_sort(mappings.begin(), mappings.end(),
                   [](const ConstraintMapping& x, const ConstraintMapping& y) {
                     return std::tie(x.priority, x.decl_index) <
                            std::tie(y.priority, y.decl_index);
                   });

  TransformationPlan plan;
  std::set<std::string> introduced;
  for (const auto& m : mappings) {
    const ConstraintPattern* pat = lib.find(m.constraint_ref);
    if (!pat) throw Error("unknown-constraint-ref", m.constraint_ref);

    PlanStep step;
    step.pattern = m.constraint_ref;
    step.target = m.element;
    step.priority = m.priority;
    step.decl_index = m.decl_index;
    step.kind = pat->kind;
    step.scope_set = mapping_scope(arch, m);
    step.actions = instantiate(*pat, m.element, arch, introduced);

    for (const auto& action : step.actions) {
      for (const auto& ref : detail::referenced_elements(action)) {
        if (introduced.count(ref)) continue;
        if (!arch.find_element(ref)) continue; // not an existing element
        if (!step.scope_set.count(ref))
          throw Error("scope-violation",
                      "step " + std::to_string(plan.steps.size()) + " (" +
                          step.pattern + "): action '" + action.verb() +
                          "' reaches " + ref + " outside scope of " + step.target);
      }
      for (const auto& name : detail::action_introduced(action)) introduced.insert(name);
    }
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

/// Extracts the model's constraint mappings and produces the deterministic
/// transformation plan realizing them. Greedy, no backtracking: unknown
/// refs and conflicts abort with diagnostics.
inline TransformationPlan plan(const Architecture& arch, const PatternLibrary& lib) {
  std::vector<ConstraintMapping> mappings = extract_mappings(arch);

  std::vector<std::string> unknown = unknown_constraint_refs(mappings, lib);
  if (!unknown.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < unknown.size(); ++i)
      joined += (i ? ", " : "") + unknown[i];
    throw Error("unknown-constraint-ref", joined);
  }

  std::vector<Conflict> conflicts = check_compatibility(arch, mappings, lib);
  if (!conflicts.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < conflicts.size(); ++i)
      joined += (i ? "; " : "") + render_conflict(conflicts[i]);
    throw Error("plan-conflict", joined);
  }

  return plan_for_mappings(arch, lib, std::move(mappings));
}

/// Applies a plan step by step, all-or-nothing, and promotes the pipeline
/// stage (GEIM -> GEIM', GEIM' -> GESM). Errors carry the failing step index.
inline Architecture apply_plan(const Architecture& arch, const TransformationPlan& plan) {
  if (arch.stage == Stage::GESM)
    throw Error("stage-order", "no plan may be applied after platform adaptation");

  Architecture result = arch;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    for (const auto& action : plan.steps[i].actions) {
      try {
        result = apply_action(result, action);
      } catch (const Error& e) {
        throw Error(e.code(), "step " + std::to_string(i) + ": " + e.detail());
      }
    }
  }

  result.stage = arch.stage == Stage::GEIM ? Stage::GEIM_PRIME : Stage::GESM;
  Diagnostics diags = validate(result);
  if (!diags.empty()) {
    std::string detail = "stage " + std::string(stage_name(result.stage));
    for (const auto& d : diags) detail += "; " + d.rule + " at " + d.path.text();
    throw Error("postcondition-failed", detail);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Plan serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string action_args_line(const AtomicAction& a) {
  struct V {
    std::string operator()(const IncludeAction& x) const { return x.element.name; }
    std::string operator()(const ReplicateAction& x) const {
      return x.target.text() + " to " + x.clone_name;
    }
    std::string operator()(const UnifyAction& x) const {
      return x.out_path.text() + " with " + x.in_path.text();
    }
    std::string operator()(const AttachAction& x) const { return x.a + " to " + x.b; }
    std::string operator()(const RenameAction& x) const {
      return x.target.text() + " to " + x.new_name;
    }
    std::string operator()(const RemoveAction& x) const { return x.target.text(); }
  };
  return std::visit(V{}, a.node);
}

} // namespace detail

/// Line-oriented plan format: a STEP header followed by one ACTION per line.
inline std::string serialize_plan(const TransformationPlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    out += "STEP " + std::to_string(i + 1) + " pattern=" + s.pattern +
           " target=" + s.target + " priority=" + std::to_string(s.priority) + "\n";
    for (const auto& a : s.actions)
      out += "ACTION " + a.verb() + " " + detail::action_args_line(a) + "\n";
  }
  return out;
}

/// Structured export for tooling; see docs/formats.md for the field names.
inline std::string serialize_plan_json(const TransformationPlan& plan) {
  nlohmann::json root;
  root["steps"] = nlohmann::json::array();
  for (const auto& s : plan.steps) {
    nlohmann::json step;
    step["pattern"] = s.pattern;
    step["target"] = s.target;
    step["priority"] = s.priority;
    step["declIndex"] = s.decl_index;
    step["kind"] = s.kind == PatternKind::Qos ? "qos" : "platform";
    step["scope"] = std::vector<std::string>(s.scope_set.begin(), s.scope_set.end());
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& a : s.actions) {
      nlohmann::json obj;
      obj["verb"] = a.verb();
      struct V {
        nlohmann::json& obj;
        void operator()(const IncludeAction& x) const {
          obj["element"] = x.element.name;
          obj["source"] = render_action(AtomicAction{x});
        }
        void operator()(const ReplicateAction& x) const {
          obj["target"] = x.target.text();
          obj["clone"] = x.clone_name;
        }
        void operator()(const UnifyAction& x) const {
          obj["out"] = x.out_path.text();
          obj["in"] = x.in_path.text();
        }
        void operator()(const AttachAction& x) const {
          obj["a"] = x.a;
          obj["b"] = x.b;
        }
        void operator()(const RenameAction& x) const {
          obj["target"] = x.target.text();
          obj["to"] = x.new_name;
        }
        void operator()(const RemoveAction& x) const { obj["target"] = x.target.text(); }
      };
      std::visit(V{obj}, a.node);
      actions.push_back(std::move(obj));
    }
    step["actions"] = std::move(actions);
    root["steps"].push_back(std::move(step));
  }
  return root.dump(2) + "\n";
}

} // namespace archweave
