#pragma once

#include <string>
#include <vector>

#include "archweave/model.hpp"

namespace archweave {

/// Finite structural predicate language used for refinement pre/post
/// conditions, pattern guarantees, and preservation checking. Every
/// predicate is decidable by graph traversal on a well-formed architecture.
struct Condition {
  enum class Kind {
    Exists,         // exists(name)
    IsComponent,    // is_component(name)
    IsConnector,    // is_connector(name)
    HasPort,        // has_port(elem, port)
    ChannelBetween, // channel_between(pathA, pathB)
    Attached,       // attached(a, b)
    Unique,         // unique(name)
    PayloadIs,      // payload_of(path) = TypeName
    And,
    Or,
    Not,
  };

  Kind kind = Kind::Exists;
  std::vector<std::string> idents; // name arguments, in order
  ElementPath path_a;
  ElementPath path_b;
  std::string type_name;        // PayloadIs right-hand side
  std::vector<Condition> kids;  // And/Or/Not operands

  bool operator==(const Condition&) const = default;

  static Condition exists(std::string n) {
    Condition c;
    c.kind = Kind::Exists;
    c.idents = {std::move(n)};
    return c;
  }
  static Condition is_component(std::string n) {
    Condition c;
    c.kind = Kind::IsComponent;
    c.idents = {std::move(n)};
    return c;
  }
  static Condition is_connector(std::string n) {
    Condition c;
    c.kind = Kind::IsConnector;
    c.idents = {std::move(n)};
    return c;
  }
  static Condition has_port(std::string elem, std::string port) {
    Condition c;
    c.kind = Kind::HasPort;
    c.idents = {std::move(elem), std::move(port)};
    return c;
  }
  static Condition channel_between(ElementPath a, ElementPath b) {
    Condition c;
    c.kind = Kind::ChannelBetween;
    c.path_a = std::move(a);
    c.path_b = std::move(b);
    return c;
  }
  static Condition attached(std::string a, std::string b) {
    Condition c;
    c.kind = Kind::Attached;
    c.idents = {std::move(a), std::move(b)};
    return c;
  }
  static Condition unique(std::string n) {
    Condition c;
    c.kind = Kind::Unique;
    c.idents = {std::move(n)};
    return c;
  }
  static Condition payload_is(ElementPath p, std::string type_name) {
    Condition c;
    c.kind = Kind::PayloadIs;
    c.path_a = std::move(p);
    c.type_name = std::move(type_name);
    return c;
  }
  static Condition conj(std::vector<Condition> kids) {
    Condition c;
    c.kind = Kind::And;
    c.kids = std::move(kids);
    return c;
  }
  static Condition disj(std::vector<Condition> kids) {
    Condition c;
    c.kind = Kind::Or;
    c.kids = std::move(kids);
    return c;
  }
  static Condition neg(Condition k) {
    Condition c;
    c.kind = Kind::Not;
    c.kids = {std::move(k)};
    return c;
  }
};

namespace detail {

inline int count_named(const ArchElement& e, const std::string& n) {
  int c = e.name == n ? 1 : 0;
  for (const auto& child : e.children) c += count_named(child, n);
  return c;
}

inline int count_named(const Architecture& a, const std::string& n) {
  int c = 0;
  for (const auto& e : a.elements) c += count_named(e, n);
  return c;
}

} // namespace detail

/// Total on well-formed architectures: unresolvable names simply make the
/// affected predicate false (or true under negation).
inline bool eval_condition(const Architecture& arch, const Condition& c) {
  using K = Condition::Kind;
  switch (c.kind) {
    case K::Exists:
      return arch.find_element(c.idents[0]) != nullptr;
    case K::IsComponent: {
      const ArchElement* e = arch.find_element(c.idents[0]);
      return e && e->kind == ElementKind::Component;
    }
    case K::IsConnector: {
      const ArchElement* e = arch.find_element(c.idents[0]);
      return e && e->kind == ElementKind::Connector;
    }
    case K::HasPort: {
      const ArchElement* e = arch.find_element(c.idents[0]);
      return e && e->find_port(c.idents[1]) != nullptr;
    }
    case K::ChannelBetween:
      for (const auto& ch : arch.channels)
        if (ch.from_path == c.path_a && ch.to_path == c.path_b) return true;
      return false;
    case K::Attached:
      for (const auto& link : arch.top_links) {
        if (link.a == c.idents[0] && link.b == c.idents[1]) return true;
        if (link.b == c.idents[0] && link.a == c.idents[1]) return true;
      }
      return false;
    case K::Unique:
      return detail::count_named(arch, c.idents[0]) <= 1;
    case K::PayloadIs: {
      try {
        ModelNode n = resolve(arch, c.path_a);
        return n.is_connection() && !n.connection->payload.is_tuple() &&
               n.connection->payload.name == c.type_name;
      } catch (const Error&) {
        return false;
      }
    }
    case K::And:
      for (const auto& k : c.kids)
        if (!eval_condition(arch, k)) return false;
      return true;
    case K::Or:
      for (const auto& k : c.kids)
        if (eval_condition(arch, k)) return true;
      return false;
    case K::Not:
      return !eval_condition(arch, c.kids[0]);
  }
  return false;
}

/// Canonical text form, reparseable by the condition grammar.
inline std::string render_condition(const Condition& c) {
  using K = Condition::Kind;
  switch (c.kind) {
    case K::Exists: return "exists(" + c.idents[0] + ")";
    case K::IsComponent: return "is_component(" + c.idents[0] + ")";
    case K::IsConnector: return "is_connector(" + c.idents[0] + ")";
    case K::HasPort: return "has_port(" + c.idents[0] + ", " + c.idents[1] + ")";
    case K::ChannelBetween:
      return "channel_between(" + c.path_a.text() + ", " + c.path_b.text() + ")";
    case K::Attached: return "attached(" + c.idents[0] + ", " + c.idents[1] + ")";
    case K::Unique: return "unique(" + c.idents[0] + ")";
    case K::PayloadIs:
      return "payload_of(" + c.path_a.text() + ") = " + c.type_name;
    case K::And:
    case K::Or: {
      std::string sep = c.kind == K::And ? " and " : " or ";
      std::string out = "(";
      for (std::size_t i = 0; i < c.kids.size(); ++i) {
        if (i) out += sep;
        out += render_condition(c.kids[i]);
      }
      return out + ")";
    }
    case K::Not: return "not " + render_condition(c.kids[0]);
  }
  return "?";
}

} // namespace archweave
