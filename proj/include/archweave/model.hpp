#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "archweave/diag.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Paths and types
// ---------------------------------------------------------------------------

/// Dotted-double-colon path into the model: element (:: child)* :: port :: connection.
struct ElementPath {
  std::vector<std::string> segments;

  ElementPath() = default;
  explicit ElementPath(std::vector<std::string> segs) : segments(std::move(segs)) {}

  static ElementPath of(std::initializer_list<std::string> segs) {
    return ElementPath(std::vector<std::string>(segs));
  }

  /// Splits "A::B::C" into segments. Empty segments are preserved so that
  /// validation can reject them.
  static ElementPath parse(const std::string& text) {
    ElementPath p;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == ':' && i + 1 < text.size() && text[i + 1] == ':') {
        p.segments.push_back(cur);
        cur.clear();
        ++i;
      } else {
        cur.push_back(text[i]);
      }
    }
    p.segments.push_back(cur);
    return p;
  }

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (i) out += "::";
      out += segments[i];
    }
    return out;
  }

  bool empty() const { return segments.empty(); }
  const std::string& front() const { return segments.front(); }

  bool operator==(const ElementPath&) const = default;
  auto operator<=>(const ElementPath&) const = default;
};

/// Nominal type expression: a named type or a tuple of named types.
/// Equality is purely nominal; there is no subtyping.
struct TypeExpr {
  std::string name;                     // set for named types
  std::vector<std::string> tuple_elems; // set for tuple types

  static TypeExpr named(std::string n) {
    TypeExpr t;
    t.name = std::move(n);
    return t;
  }
  static TypeExpr tuple(std::vector<std::string> elems) {
    TypeExpr t;
    t.tuple_elems = std::move(elems);
    return t;
  }

  bool is_tuple() const { return name.empty(); }

  std::string text() const {
    if (!is_tuple()) return name;
    std::string out = "tuple [";
    for (std::size_t i = 0; i < tuple_elems.size(); ++i) {
      if (i) out += ", ";
      out += tuple_elems[i];
    }
    out += "]";
    return out;
  }

  bool operator==(const TypeExpr&) const = default;
};

// ---------------------------------------------------------------------------
// Behaviour IR
// ---------------------------------------------------------------------------

/// Minimal expression language: string literals, variables, and
/// uninterpreted function application.
struct Expr {
  enum class Kind { Literal, Var, Call };
  Kind kind = Kind::Var;
  std::string text;       // literal value or identifier
  std::vector<Expr> args; // for Call

  static Expr lit(std::string s) { return Expr{Kind::Literal, std::move(s), {}}; }
  static Expr var(std::string s) { return Expr{Kind::Var, std::move(s), {}}; }
  static Expr call(std::string fn, std::vector<Expr> a) {
    return Expr{Kind::Call, std::move(fn), std::move(a)};
  }

  bool operator==(const Expr&) const = default;
};

/// Behaviour-level condition. The only builtin the dialect needs is the
/// per-element liveness probe maintained by the simulator from fault events.
struct BehaviourCond {
  std::string down_element; // serviceDown(<element>)
  bool operator==(const BehaviourCond&) const = default;
};

struct Stmt;

struct SendStmt {
  ElementPath path; // outgoing connection, relative to the enclosing element
  Expr value;
  bool operator==(const SendStmt&) const = default;
};
struct ReceiveStmt {
  ElementPath path; // incoming connection, relative to the enclosing element
  std::string var;
  std::string type_name;
  bool operator==(const ReceiveStmt&) const = default;
};
struct AssignStmt {
  std::string var;
  Expr value;
  bool operator==(const AssignStmt&) const = default;
};
struct IfStmt {
  BehaviourCond cond;
  std::vector<Stmt> then_stmt; // exactly one statement
  bool operator==(const IfStmt&) const;
};
struct InvokeStmt {
  std::string name; // declared abstraction
  bool operator==(const InvokeStmt&) const = default;
};
struct ExternalStmt {
  std::string fn;
  std::vector<Expr> args;
  bool operator==(const ExternalStmt&) const = default;
};
/// Route-table assignment: `value <route_var> := <element>`. Interpreted by
/// the simulator as a per-connector redirection entry.
struct RouteAssignStmt {
  std::string route_var;
  std::string element;
  bool operator==(const RouteAssignStmt&) const = default;
};

struct Stmt {
  std::variant<SendStmt, ReceiveStmt, AssignStmt, IfStmt, InvokeStmt,
               ExternalStmt, RouteAssignStmt>
      node;
  bool operator==(const Stmt&) const = default;
};

inline bool IfStmt::operator==(const IfStmt& o) const {
  return cond == o.cond && then_stmt == o.then_stmt;
}

struct Abstraction {
  std::string name;
  bool recursive = false;
  std::vector<Stmt> body;
  bool operator==(const Abstraction&) const = default;
};

/// An element's behaviour: named abstractions plus the parallel composition
/// of the abstractions started at element boot.
struct Behaviour {
  std::vector<Abstraction> abstractions;
  std::vector<std::string> compose; // invocation names
  bool operator==(const Behaviour&) const = default;
};

// ---------------------------------------------------------------------------
// Structural model
// ---------------------------------------------------------------------------

enum class Direction { Incoming, Outgoing };

struct Connection {
  std::string name;
  TypeExpr payload;
  Direction direction = Direction::Incoming;
  bool operator==(const Connection&) const = default;
};

struct Port {
  std::string name;
  std::vector<Connection> incoming;
  std::vector<Connection> outgoing;
  bool operator==(const Port&) const = default;
};

/// Constraint mapping annotation: `--<ref::priority:p,range:r>--`.
struct ConstraintAnnotation {
  std::string constraint_ref;
  int priority = 1; // 1 = applied first
  int range = 1;    // hop budget for the pattern's scope
  bool operator==(const ConstraintAnnotation&) const = default;
};

enum class ElementKind { Component, Connector };
enum class RoleTag { Plain, Service, GenericInterface };

struct ArchElement {
  std::string name;
  ElementKind kind = ElementKind::Component;
  RoleTag role = RoleTag::Plain;
  int weight = 1; // deployment weight, `weight=<n>` in the source
  std::vector<std::pair<std::string, TypeExpr>> type_decls;
  std::vector<Port> ports;
  std::optional<Behaviour> behaviour;
  std::vector<ArchElement> children;
  std::vector<ConstraintAnnotation> annotations;

  bool operator==(const ArchElement&) const = default;

  const Port* find_port(const std::string& n) const {
    for (const auto& p : ports)
      if (p.name == n) return &p;
    return nullptr;
  }
  const ArchElement* find_child(const std::string& n) const {
    for (const auto& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }
};

/// Directed communication channel; always stored outgoing -> incoming.
struct Channel {
  ElementPath from_path; // resolves to an outgoing connection
  ElementPath to_path;   // resolves to an incoming connection
  bool operator==(const Channel&) const = default;
};

/// Undirected attachment between two top-level elements.
struct Attachment {
  std::string a;
  std::string b;
  bool operator==(const Attachment&) const = default;
};

enum class Stage { GEIM, GEIM_PRIME, GESM };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::GEIM: return "GEIM";
    case Stage::GEIM_PRIME: return "GEIM'";
    case Stage::GESM: return "GESM";
  }
  return "?";
}

struct Architecture {
  std::string name;
  std::string style_ref = "architecture";
  std::vector<ArchElement> elements;
  std::vector<Channel> channels;
  std::vector<Attachment> top_links;
  Stage stage = Stage::GEIM;

  bool operator==(const Architecture&) const = default;

  const ArchElement* find_element(const std::string& n) const {
    for (const auto& e : elements)
      if (e.name == n) return &e;
    return nullptr;
  }
  ArchElement* find_element(const std::string& n) {
    for (auto& e : elements)
      if (e.name == n) return &e;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

struct ModelNode {
  const ArchElement* element = nullptr;
  const Port* port = nullptr;
  const Connection* connection = nullptr;

  bool is_element() const { return element && !port && !connection; }
  bool is_port() const { return port && !connection; }
  bool is_connection() const { return connection != nullptr; }
};

namespace detail {

inline const Connection* find_connection(const Port& port, const std::string& n,
                                         Direction* dir_out = nullptr) {
  for (const auto& c : port.incoming)
    if (c.name == n) {
      if (dir_out) *dir_out = Direction::Incoming;
      return &c;
    }
  for (const auto& c : port.outgoing)
    if (c.name == n) {
      if (dir_out) *dir_out = Direction::Outgoing;
      return &c;
    }
  return nullptr;
}

/// Resolves the remainder of a path below an element. Child elements shadow
/// ports of the same name; the order is fixed so resolution is deterministic.
inline bool resolve_below(const ArchElement& elem,
                          const std::vector<std::string>& segs, std::size_t i,
                          ModelNode& out) {
  out.element = &elem;
  if (i == segs.size()) return true;
  if (const ArchElement* child = elem.find_child(segs[i]))
    return resolve_below(*child, segs, i + 1, out);
  if (const Port* port = elem.find_port(segs[i])) {
    out.port = port;
    if (i + 1 == segs.size()) return true;
    if (const Connection* conn = find_connection(*port, segs[i + 1])) {
      out.connection = conn;
      return i + 2 == segs.size();
    }
    return false;
  }
  return false;
}

} // namespace detail

/// Resolves a path to an element, port, or connection.
/// Throws Error("unresolved-path") when any segment fails to match.
inline ModelNode resolve(const Architecture& arch, const ElementPath& path) {
  if (!path.empty()) {
    if (const ArchElement* top = arch.find_element(path.front())) {
      ModelNode node;
      if (detail::resolve_below(*top, path.segments, 1, node)) return node;
    }
  }
  throw Error("unresolved-path", path.text());
}

inline bool resolves(const Architecture& arch, const ElementPath& path) {
  try {
    resolve(arch, path);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One well-formedness violation: a rule identifier plus the offending path.
struct Diagnostic {
  std::string rule;
  ElementPath path;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

namespace detail {

inline bool is_builtin_type(const std::string& n) {
  return n == "String" || n == "any";
}

inline bool type_in_scope(const std::vector<const ArchElement*>& chain,
                          const TypeExpr& t) {
  auto declared = [&](const std::string& n) {
    if (is_builtin_type(n)) return true;
    for (const ArchElement* e : chain)
      for (const auto& [dn, dt] : e->type_decls)
        if (dn == n) return true;
    return false;
  };
  if (!t.is_tuple()) return declared(t.name);
  for (const auto& elem_name : t.tuple_elems)
    if (!declared(elem_name)) return false;
  return true;
}

inline void validate_element(const ArchElement& elem, ElementPath prefix,
                             std::vector<const ArchElement*>& chain, bool top_level,
                             Diagnostics& out) {
  prefix.segments.push_back(elem.name);
  chain.push_back(&elem);

  if (elem.kind == ElementKind::Connector && !elem.annotations.empty())
    out.push_back({"annotation-on-connector", prefix,
                   "constraint annotations may only target components"});
  if (!top_level && !elem.annotations.empty())
    out.push_back({"annotation-on-nested-element", prefix,
                   "constraint annotations are restricted to top-level elements"});
  for (const auto& ann : elem.annotations) {
    if (ann.priority < 1 || ann.range < 1)
      out.push_back({"invalid-annotation-bounds", prefix,
                     "priority and range must be >= 1 in annotation '" +
                         ann.constraint_ref + "'"});
  }

  std::set<std::string> port_names;
  for (const auto& port : elem.ports) {
    ElementPath port_path = prefix;
    port_path.segments.push_back(port.name);
    if (!port_names.insert(port.name).second)
      out.push_back({"duplicate-port-name", port_path,
                     "port name reused within element"});
    std::set<std::string> conn_names;
    auto check_conns = [&](const std::vector<Connection>& conns) {
      for (const auto& conn : conns) {
        ElementPath conn_path = port_path;
        conn_path.segments.push_back(conn.name);
        if (!conn_names.insert(conn.name).second)
          out.push_back({"duplicate-connection-name", conn_path,
                         "connection name reused within port"});
        if (!type_in_scope(chain, conn.payload))
          out.push_back({"unknown-payload-type", conn_path,
                         "payload '" + conn.payload.text() +
                             "' is neither declared nor builtin"});
      }
    };
    check_conns(port.incoming);
    check_conns(port.outgoing);
  }

  std::set<std::string> child_names;
  for (const auto& child : elem.children) {
    if (!child_names.insert(child.name).second) {
      ElementPath child_path = prefix;
      child_path.segments.push_back(child.name);
      out.push_back({"duplicate-element-name", child_path,
                     "element name reused within nesting level"});
    }
    validate_element(child, prefix, chain, false, out);
  }

  chain.pop_back();
}

} // namespace detail

/// Checks every model invariant and returns the complete violation list.
/// Pure and idempotent; an empty result means the architecture is well-formed.
inline Diagnostics validate(const Architecture& arch) {
  Diagnostics out;

  std::set<std::string> top_names;
  std::vector<const ArchElement*> chain;
  for (const auto& elem : arch.elements) {
    if (!top_names.insert(elem.name).second)
      out.push_back({"duplicate-element-name", ElementPath::of({elem.name}),
                     "element name reused within nesting level"});
    detail::validate_element(elem, ElementPath{}, chain, true, out);
  }

  for (const auto& ch : arch.channels) {
    ModelNode from, to;
    bool from_ok = false, to_ok = false;
    try {
      from = resolve(arch, ch.from_path);
      from_ok = from.is_connection();
    } catch (const Error&) {
    }
    try {
      to = resolve(arch, ch.to_path);
      to_ok = to.is_connection();
    } catch (const Error&) {
    }
    if (!from_ok)
      out.push_back({"unresolved-channel-endpoint", ch.from_path,
                     "channel endpoint does not name a connection"});
    if (!to_ok)
      out.push_back({"unresolved-channel-endpoint", ch.to_path,
                     "channel endpoint does not name a connection"});
    if (!from_ok || !to_ok) continue;
    if (from.connection->direction != Direction::Outgoing)
      out.push_back({"channel-direction", ch.from_path,
                     "channel source must be an outgoing connection"});
    if (to.connection->direction != Direction::Incoming)
      out.push_back({"channel-direction", ch.to_path,
                     "channel sink must be an incoming connection"});
    if (from.connection->direction == Direction::Outgoing &&
        to.connection->direction == Direction::Incoming &&
        !(from.connection->payload == to.connection->payload))
      out.push_back({"channel-type-mismatch", ch.from_path,
                     "payload " + from.connection->payload.text() + " vs " +
                         to.connection->payload.text() + " at " +
                         ch.to_path.text()});
  }

  for (const auto& link : arch.top_links) {
    if (!arch.find_element(link.a))
      out.push_back({"unresolved-attachment", ElementPath::of({link.a}),
                     "attachment endpoint is not a top-level element"});
    if (!arch.find_element(link.b))
      out.push_back({"unresolved-attachment", ElementPath::of({link.b}),
                     "attachment endpoint is not a top-level element"});
  }

  if (arch.stage == Stage::GESM) {
    for (const auto& elem : arch.elements)
      if (elem.role == RoleTag::GenericInterface)
        out.push_back({"generic-interface-in-gesm", ElementPath::of({elem.name}),
                       "platform adaptation must replace generic interfaces"});
  }

  return out;
}

// ---------------------------------------------------------------------------
// Neighborhood
// ---------------------------------------------------------------------------

/// Top-level elements reachable from `elem` via at most `hops` channel or
/// attachment edges, excluding `elem` itself.
inline std::set<std::string> neighbors(const Architecture& arch,
                                       const std::string& elem, int hops) {
  if (!arch.find_element(elem)) throw Error("unresolved-path", elem);

  std::map<std::string, std::set<std::string>> adj;
  auto edge = [&](const std::string& x, const std::string& y) {
    if (x == y) return;
    adj[x].insert(y);
    adj[y].insert(x);
  };
  for (const auto& ch : arch.channels) {
    if (!ch.from_path.empty() && !ch.to_path.empty())
      edge(ch.from_path.front(), ch.to_path.front());
  }
  for (const auto& link : arch.top_links) edge(link.a, link.b);

  std::set<std::string> seen{elem};
  std::vector<std::string> frontier{elem};
  for (int step = 0; step < hops && !frontier.empty(); ++step) {
    std::vector<std::string> next;
    for (const auto& n : frontier)
      for (const auto& m : adj[n])
        if (seen.insert(m).second) next.push_back(m);
    frontier = std::move(next);
  }
  seen.erase(elem);
  return seen;
}

// ---------------------------------------------------------------------------
// Structural equality (order-insensitive at the top level)
// ---------------------------------------------------------------------------

namespace detail {

inline Architecture canonical_order(const Architecture& arch) {
  Architecture c = arch;
  std::sort(c.elements.begin(), c.elements.end(),
            [](const ArchElement& x, const ArchElement& y) { return x.name < y.name; });
  std::sort(c.channels.begin(), c.channels.end(),
            [](const Channel& x, const Channel& y) {
              return std::tie(x.from_path, x.to_path) < std::tie(y.from_path, y.to_path);
            });
  auto norm_link = [](const Attachment& l) {
    return l.a <= l.b ? std::pair{l.a, l.b} : std::pair{l.b, l.a};
  };
  std::sort(c.top_links.begin(), c.top_links.end(),
            [&](const Attachment& x, const Attachment& y) {
              return norm_link(x) < norm_link(y);
            });
  for (auto& l : c.top_links)
    if (l.b < l.a) std::swap(l.a, l.b);
  return c;
}

} // namespace detail

/// Structural equality: element/channel/attachment ordering at the top level
/// is irrelevant, everything inside an element (ports, statements, children
/// order) is significant. The pipeline stage tag is metadata, not structure.
inline bool structurally_equal(const Architecture& a, const Architecture& b) {
  Architecture ca = detail::canonical_order(a);
  Architecture cb = detail::canonical_order(b);
  ca.stage = cb.stage = Stage::GEIM;
  return ca == cb;
}

} // namespace archweave
