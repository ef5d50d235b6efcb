#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "archweave/detail/sha256.hpp"
#include "archweave/model.hpp"
#include "archweave/render.hpp"
#include "archweave/units.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Code-skeleton generation
// ---------------------------------------------------------------------------

/// A codegen mapping with template contents resolved; produced from a
/// CodegenMappingDecl by the loader.
struct CodegenMapping {
  std::string name;
  std::string target_label;
  std::string extension;
  std::map<TemplateKey, std::string> templates;
};

/// Generated files plus a digest manifest (`<sha256><SP><SP><path>` lines).
struct FileSet {
  std::vector<std::pair<std::string, std::string>> files; // path -> content
  std::string manifest;

  bool operator==(const FileSet&) const = default;
};

namespace detail {

inline std::string join_names(const std::vector<std::string>& names,
                              const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += sep;
    out += names[i];
  }
  return out;
}

inline std::string ports_placeholder(const ArchElement& e) {
  std::vector<std::string> names;
  for (const auto& p : e.ports) names.push_back(p.name);
  return join_names(names);
}

inline std::string connections_placeholder(const ArchElement& e) {
  std::vector<std::string> entries;
  for (const auto& p : e.ports) {
    for (const auto& c : p.incoming)
      entries.push_back(p.name + "::" + c.name + " : " + c.payload.text() + " (incoming)");
    for (const auto& c : p.outgoing)
      entries.push_back(p.name + "::" + c.name + " : " + c.payload.text() + " (outgoing)");
  }
  return join_names(entries, "; ");
}

inline std::string behaviour_stub(const ArchElement& e) {
  if (!e.behaviour) return "";
  std::string out;
  for (const auto& abs : e.behaviour->abstractions) {
    out += std::string(abs.recursive ? "recursive " : "") + abs.name + ":\n";
    for (const auto& s : abs.body) out += "  " + render_stmt_inline(s) + "\n";
  }
  if (!e.behaviour->compose.empty()) {
    out += "compose:";
    for (const auto& c : e.behaviour->compose) out += " " + c + "()";
    out += "\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

inline std::string apply_template(const std::string& templ,
                                  const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(templ.size());
  std::size_t pos = 0;
  while (pos < templ.size()) {
    std::size_t open = templ.find("{{", pos);
    if (open == std::string::npos) {
      out.append(templ, pos, std::string::npos);
      break;
    }
    out.append(templ, pos, open - pos);
    std::size_t close = templ.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(templ, open, std::string::npos);
      break;
    }
    std::string key = templ.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) {
      // leave it in place; the totality check below reports it
      out.append(templ, open, close + 2 - open);
    } else {
      out += it->second;
    }
    pos = close + 2;
  }
  return out;
}

inline std::string render_skeleton(const ArchElement& e, const CodegenMapping& mapping);

inline std::string children_placeholder(const ArchElement& e,
                                        const CodegenMapping& mapping) {
  std::string out;
  for (const auto& child : e.children) {
    if (!out.empty()) out += "\n";
    out += render_skeleton(child, mapping);
  }
  return out;
}

inline std::string render_skeleton(const ArchElement& e, const CodegenMapping& mapping) {
  auto it = mapping.templates.find({e.kind, e.role});
  if (it == mapping.templates.end())
    throw Error("missing-template",
                std::string(kind_word(e.kind)) + ", " + role_word(e.role));
  std::map<std::string, std::string> values = {
      {"name", e.name},
      {"ports", ports_placeholder(e)},
      {"connections", connections_placeholder(e)},
      {"behaviour_stub", behaviour_stub(e)},
      {"children", children_placeholder(e, mapping)},
  };
  return apply_template(it->second, values);
}

} // namespace detail

/// One skeleton file per top-level element, `<name>.<extension>`, plus the
/// manifest. Placeholder substitution is the only transformation; output is
/// byte-identical across runs.
inline FileSet generate_code(const Architecture& arch, const CodegenMapping& mapping) {
  if (arch.stage != Stage::GESM)
    throw Error("precondition-failed", "generate_code, architecture stage must be GESM");

  FileSet out;
  for (const auto& e : arch.elements) {
    std::string content = detail::render_skeleton(e, mapping);
    if (content.find("{{") != std::string::npos)
      throw Error("unsubstituted-placeholder", e.name + "." + mapping.extension);
    out.files.emplace_back(e.name + "." + mapping.extension, std::move(content));
  }
  for (const auto& [path, content] : out.files)
    out.manifest += detail::sha256_hex(content) + "  " + path + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Deployment planning
// ---------------------------------------------------------------------------

struct DeploymentPlan {
  std::map<std::string, std::string> assignments; // element -> resource
  std::string strategy = "best-fit-decreasing";
  std::vector<std::string> violations; // empty in a valid plan

  bool operator==(const DeploymentPlan&) const = default;
};

namespace detail {

/// An element and anything named `<it>Clone<k>` share a base name; the
/// anti-affinity rule keeps same-base elements on distinct resources.
inline std::string deploy_base_name(const std::string& name) {
  std::size_t pos = name.rfind("Clone");
  if (pos == std::string::npos || pos == 0 || pos + 5 >= name.size()) return name;
  for (std::size_t i = pos + 5; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  return name.substr(0, pos);
}

} // namespace detail

/// Best-fit-decreasing placement with a hard anti-affinity constraint between
/// an element and its clones. The candidate order is tightest-fit first with
/// declaration-order tie-breaking; on a dead end the search backtracks, so a
/// feasible assignment is found whenever one exists. Deterministic.
inline DeploymentPlan plan_deployment(const Architecture& arch,
                                      const ResourceInventory& inv) {
  if (arch.stage != Stage::GESM)
    throw Error("precondition-failed", "plan_deployment, architecture stage must be GESM");
  if (inv.resources.empty()) throw Error("insufficient-capacity", "no resources");

  struct Item {
    std::string name;
    std::string base;
    int weight;
    std::size_t decl;
  };
  std::vector<Item> items;
  bool has_clones = false;
  int total_weight = 0;
  for (std::size_t i = 0; i < arch.elements.size(); ++i) {
    const auto& e = arch.elements[i];
    std::string base = detail::deploy_base_name(e.name);
    if (base != e.name) has_clones = true;
    items.push_back({e.name, base, e.weight, i});
    total_weight += e.weight;
  }

  if (has_clones && inv.resources.size() < 2)
    throw Error("anti-affinity-unsatisfiable",
                "replicas present but only one resource available");
  if (total_weight > inv.total_capacity())
    throw Error("insufficient-capacity",
                "total weight " + std::to_string(total_weight) + " exceeds capacity " +
                    std::to_string(inv.total_capacity()));

  // heaviest first, declaration order on ties
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.weight > b.weight; });

  std::vector<int> remaining;
  for (const auto& r : inv.resources) remaining.push_back(r.capacity);
  std::vector<std::vector<std::string>> hosted(inv.resources.size());
  std::vector<int> chosen(items.size(), -1);

  auto feasible = [&](std::size_t item, std::size_t res) {
    if (remaining[res] < items[item].weight) return false;
    for (const auto& other : hosted[res])
      if (other != items[item].name &&
          detail::deploy_base_name(other) == items[item].base)
        return false;
    return true;
  };

  auto search = [&](auto&& self, std::size_t item) -> bool {
    if (item == items.size()) return true;
    // candidates: best fit (smallest remaining capacity after placement),
    // then declaration order
    std::vector<std::size_t> candidates;
    for (std::size_t r = 0; r < inv.resources.size(); ++r)
      if (feasible(item, r)) candidates.push_back(r);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) {
                       return remaining[a] - items[item].weight <
                              remaining[b] - items[item].weight;
                     });
    for (std::size_t r : candidates) {
      remaining[r] -= items[item].weight;
      hosted[r].push_back(items[item].name);
      chosen[item] = static_cast<int>(r);
      if (self(self, item + 1)) return true;
      chosen[item] = -1;
      hosted[r].pop_back();
      remaining[r] += items[item].weight;
    }
    return false;
  };

  if (!search(search, 0))
    throw Error("insufficient-capacity", "no feasible anti-affine assignment");

  DeploymentPlan plan;
  for (std::size_t i = 0; i < items.size(); ++i)
    plan.assignments[items[i].name] = inv.resources[chosen[i]].name;
  return plan;
}

/// `ASSIGN <element> <resource>` per element (declaration order), then the
/// STRATEGY line.
inline std::string render_deployment(const Architecture& arch,
                                     const DeploymentPlan& plan) {
  std::string out;
  for (const auto& e : arch.elements) {
    auto it = plan.assignments.find(e.name);
    if (it != plan.assignments.end())
      out += "ASSIGN " + e.name + " " + it->second + "\n";
  }
  out += "STRATEGY " + plan.strategy + "\n";
  return out;
}

} // namespace archweave
