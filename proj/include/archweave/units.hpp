#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "archweave/model.hpp"

namespace archweave {

/// Physical resource inventory (`resources` dialect).
struct ResourceInventory {
  struct Resource {
    std::string name;
    int capacity = 1;
    bool operator==(const Resource&) const = default;
  };

  std::string name;
  std::vector<Resource> resources;

  bool operator==(const ResourceInventory&) const = default;

  int total_capacity() const {
    int t = 0;
    for (const auto& r : resources) t += r.capacity;
    return t;
  }
};

/// Template lookup key: one template per element kind and role.
struct TemplateKey {
  ElementKind kind = ElementKind::Component;
  RoleTag role = RoleTag::Plain;
  bool operator==(const TemplateKey&) const = default;
  auto operator<=>(const TemplateKey&) const = default;
};

/// Parsed `mapping` descriptor: names the code-generation target and binds
/// template files to element kinds. File contents are resolved by the loader,
/// not the parser.
struct CodegenMappingDecl {
  std::string name;
  std::string target_label;
  std::string extension;
  std::map<TemplateKey, std::string> template_files;

  bool operator==(const CodegenMappingDecl&) const = default;
};

inline const char* kind_word(ElementKind k) {
  return k == ElementKind::Component ? "component" : "connector";
}

inline const char* role_word(RoleTag r) {
  switch (r) {
    case RoleTag::Plain: return "plain";
    case RoleTag::Service: return "service";
    case RoleTag::GenericInterface: return "generic-interface";
  }
  return "plain";
}

} // namespace archweave
