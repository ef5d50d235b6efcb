#pragma once

#include <map>
#include <string>
#include <vector>

#include "archweave/actions.hpp"
#include "archweave/condition.hpp"

namespace archweave {

enum class PatternKind { Qos, Platform };
enum class BlockScope { Architecture, Element };

/// A refinement design pattern: scoped blocks of action templates plus the
/// properties the pattern guarantees and the patterns it is incompatible with.
/// QoS patterns and platform patterns share this representation.
struct ConstraintPattern {
  struct Block {
    BlockScope scope = BlockScope::Architecture;
    std::string var;
    std::vector<AtomicAction> actions; // templates: identifiers may be block vars
    bool operator==(const Block&) const = default;
  };

  std::string name;
  PatternKind kind = PatternKind::Qos;
  std::vector<Block> blocks;
  std::vector<Condition> provides;
  std::vector<std::string> conflicts_with;
  std::vector<std::string> requires_patterns;

  bool operator==(const ConstraintPattern&) const = default;

  const Block* element_block() const {
    for (const auto& b : blocks)
      if (b.scope == BlockScope::Element) return &b;
    return nullptr;
  }
};

enum class Relation { Conflicts, Requires, Independent };

struct CompatibilityRule {
  std::string pattern_a;
  std::string pattern_b;
  Relation relation = Relation::Independent;
  bool operator==(const CompatibilityRule&) const = default;
};

/// Name-indexed pattern set plus the compatibility rule table derived from
/// the patterns' conflicts/requires declarations.
struct PatternLibrary {
  std::map<std::string, ConstraintPattern> patterns;
  std::vector<CompatibilityRule> rules;

  const ConstraintPattern* find(const std::string& name) const {
    auto it = patterns.find(name);
    return it == patterns.end() ? nullptr : &it->second;
  }

  /// Conflict relation is symmetric; requires is directional (a requires b).
  Relation relation(const std::string& a, const std::string& b) const {
    for (const auto& r : rules) {
      if (r.relation == Relation::Conflicts &&
          ((r.pattern_a == a && r.pattern_b == b) ||
           (r.pattern_a == b && r.pattern_b == a)))
        return Relation::Conflicts;
      if (r.relation == Relation::Requires && r.pattern_a == a && r.pattern_b == b)
        return Relation::Requires;
    }
    return Relation::Independent;
  }

  std::vector<std::string> required_by(const std::string& a) const {
    std::vector<std::string> out;
    for (const auto& r : rules)
      if (r.relation == Relation::Requires && r.pattern_a == a)
        out.push_back(r.pattern_b);
    return out;
  }
};

/// Builds the rule table from pattern declarations and checks that every
/// referenced pattern exists.
inline void rebuild_rules(PatternLibrary& lib) {
  lib.rules.clear();
  auto known = [&](const std::string& n) { return lib.patterns.count(n) > 0; };
  for (const auto& [name, pat] : lib.patterns) {
    for (const auto& other : pat.conflicts_with) {
      if (!known(other))
        throw Error("unknown-pattern-in-rules", name + " conflicts with " + other);
      // keep one rule per unordered pair
      bool dup = false;
      for (const auto& r : lib.rules)
        if (r.relation == Relation::Conflicts &&
            ((r.pattern_a == name && r.pattern_b == other) ||
             (r.pattern_a == other && r.pattern_b == name)))
          dup = true;
      if (!dup) lib.rules.push_back({name, other, Relation::Conflicts});
    }
    for (const auto& other : pat.requires_patterns) {
      if (!known(other))
        throw Error("unknown-pattern-in-rules", name + " requires " + other);
      lib.rules.push_back({name, other, Relation::Requires});
    }
  }
}

} // namespace archweave
