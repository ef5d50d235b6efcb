#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "archweave/model.hpp"
#include "archweave/render.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Scenarios and traces
// ---------------------------------------------------------------------------

struct FaultEvent {
  int step = 0;
  std::string element;
  bool down = true;
  bool operator==(const FaultEvent&) const = default;
};

struct WorkItem {
  int step = 0;
  std::string element;
  std::string port;
  std::string message;
  bool operator==(const WorkItem&) const = default;
};

struct SimScenario {
  int max_steps = 100;
  unsigned seed = 0;
  // round-robin by default; the seed is consumed only in randomized mode
  bool randomized_order = false;
  std::vector<FaultEvent> faults;
  std::vector<WorkItem> workload;
  bool operator==(const SimScenario&) const = default;
};

enum class EventKind { Send, Receive, Rendezvous, External, Fault, RouteUpdate, Blocked };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Send: return "send";
    case EventKind::Receive: return "receive";
    case EventKind::Rendezvous: return "rendezvous";
    case EventKind::External: return "external";
    case EventKind::Fault: return "fault";
    case EventKind::RouteUpdate: return "route_update";
    case EventKind::Blocked: return "blocked";
  }
  return "?";
}

struct TraceEvent {
  int step = 0;
  std::string element;
  EventKind kind = EventKind::Send;
  std::string detail;
  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  bool operator==(const Trace&) const = default;
};

/// TSV export: `step<TAB>element<TAB>kind<TAB>detail`, one event per line.
inline std::string render_trace(const Trace& trace) {
  std::string out;
  for (const auto& e : trace.events)
    out += std::to_string(e.step) + "\t" + e.element + "\t" +
           event_kind_name(e.kind) + "\t" + e.detail + "\n";
  return out;
}

/// Parses the line-oriented scenario format: MAXSTEPS, SEED, FAULT, REQ.
inline SimScenario parse_scenario(const std::string& text) {
  SimScenario sc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head[0] == '#') continue;
    auto bad = [&](const std::string& why) {
      throw Error("invalid-scenario", "line " + std::to_string(lineno) + ": " + why);
    };
    if (head == "MAXSTEPS") {
      if (!(ls >> sc.max_steps) || sc.max_steps < 1) bad("MAXSTEPS needs a positive integer");
    } else if (head == "SEED") {
      if (!(ls >> sc.seed)) bad("SEED needs an integer");
    } else if (head == "FAULT") {
      FaultEvent f;
      std::string mode;
      if (!(ls >> f.step >> f.element >> mode)) bad("FAULT needs: step element down|up");
      if (mode == "down")
        f.down = true;
      else if (mode == "up")
        f.down = false;
      else
        bad("fault mode must be down or up");
      sc.faults.push_back(std::move(f));
    } else if (head == "REQ") {
      WorkItem w;
      if (!(ls >> w.step >> w.element >> w.port)) bad("REQ needs: step element port message");
      std::getline(ls, w.message);
      std::size_t start = w.message.find_first_not_of(" \t");
      w.message = start == std::string::npos ? "" : w.message.substr(start);
      if (w.message.empty()) bad("REQ needs a message");
      sc.workload.push_back(std::move(w));
    } else {
      bad("unknown directive " + head);
    }
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace detail {

/// Strips a trailing Clone<digits> suffix; replicas share a base name with
/// their original, which powers route redirection and the open-connection
/// analysis.
inline std::string base_name(const std::string& name) {
  std::size_t pos = name.rfind("Clone");
  if (pos == std::string::npos || pos == 0) return name;
  if (pos + 5 >= name.size()) return name;
  for (std::size_t i = pos + 5; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  return name.substr(0, pos);
}

inline bool is_clone_of(const std::string& clone, const std::string& original) {
  return clone != original && base_name(clone) == original;
}

struct EndpointKey {
  std::string element;
  std::string subpath; // "Port::Conn" relative to the element
  bool operator==(const EndpointKey&) const = default;
  auto operator<=>(const EndpointKey&) const = default;
};

struct SimChannel {
  EndpointKey src;
  EndpointKey dst;
};

class Simulator {
public:
  Simulator(const Architecture& arch, const SimScenario& scenario)
      : arch_(arch), scenario_(scenario) {}

  Trace run() {
    prepare();
    std::mt19937 rng(scenario_.seed);
    for (int round = 1; round <= scenario_.max_steps; ++round) {
      round_ = round;
      inject_faults();
      for (auto& [name, rt] : runtime_) rt.budget_spent = false;

      std::vector<std::string> order = element_order_;
      if (scenario_.randomized_order) std::shuffle(order.begin(), order.end(), rng);
      for (const auto& name : order) visit(name);
    }
    return std::move(trace_);
  }

private:
  struct Frame {
    const std::vector<Stmt>* body = nullptr;
    std::size_t idx = 0;
  };
  struct Thread {
    std::vector<Frame> frames;
    std::map<std::string, std::string> env;
    bool done() const { return frames.empty(); }
  };
  struct ElementRuntime {
    const ArchElement* element = nullptr;
    std::vector<Thread> threads;
    std::size_t next_thread = 0;
    std::vector<std::pair<std::string, std::string>> routes; // var -> element
    bool alive = true;
    bool budget_spent = false;
  };

  const Architecture& arch_;
  const SimScenario& scenario_;
  int round_ = 0;
  Trace trace_;
  std::vector<std::string> element_order_;
  std::map<std::string, ElementRuntime> runtime_;
  std::vector<SimChannel> channels_;
  std::set<EndpointKey> bound_; // endpoints served by a channel (incl. replicas)
  std::map<std::pair<std::string, std::string>, std::deque<WorkItem>> queues_;

  // --- setup ------------------------------------------------------------

  [[noreturn]] void unresolved(const std::string& what) const {
    throw Error("unresolved-behaviour-path", what);
  }

  EndpointKey endpoint_of(const ElementPath& p) const {
    if (p.segments.size() < 2) unresolved(p.text());
    std::string sub;
    for (std::size_t i = 1; i < p.segments.size(); ++i) {
      if (i > 1) sub += "::";
      sub += p.segments[i];
    }
    return {p.front(), sub};
  }

  /// Normalizes a behaviour path (relative to its element) to Port::Conn.
  std::string conn_subpath(const ArchElement& elem, const ElementPath& p,
                           Direction want) const {
    if (p.segments.size() == 2) {
      const Port* port = elem.find_port(p.segments[0]);
      if (port) {
        Direction dir;
        if (find_connection(*port, p.segments[1], &dir) && dir == want)
          return p.segments[0] + "::" + p.segments[1];
      }
      unresolved(elem.name + "::" + p.text());
    }
    if (p.segments.size() == 1) {
      // unique connection name across the element's ports
      std::string found;
      for (const auto& port : elem.ports) {
        Direction dir;
        if (find_connection(port, p.segments[0], &dir) && dir == want) {
          if (!found.empty()) unresolved(elem.name + "::" + p.text() + " (ambiguous)");
          found = port.name + "::" + p.segments[0];
        }
      }
      if (found.empty()) unresolved(elem.name + "::" + p.text());
      return found;
    }
    unresolved(elem.name + "::" + p.text());
  }

  void check_body(const ArchElement& elem, const std::vector<Stmt>& body,
                  const std::set<std::string>& abstraction_names) const {
    for (const auto& s : body) {
      if (const auto* snd = std::get_if<SendStmt>(&s.node))
        conn_subpath(elem, snd->path, Direction::Outgoing);
      else if (const auto* rcv = std::get_if<ReceiveStmt>(&s.node))
        conn_subpath(elem, rcv->path, Direction::Incoming);
      else if (const auto* inv = std::get_if<InvokeStmt>(&s.node)) {
        if (!abstraction_names.count(inv->name))
          unresolved(elem.name + ": invocation of undeclared abstraction " + inv->name);
      } else if (const auto* branch = std::get_if<IfStmt>(&s.node)) {
        if (!arch_.find_element(branch->cond.down_element))
          unresolved(elem.name + ": serviceDown(" + branch->cond.down_element + ")");
        check_body(elem, branch->then_stmt, abstraction_names);
      } else if (const auto* route = std::get_if<RouteAssignStmt>(&s.node)) {
        if (!arch_.find_element(route->element))
          unresolved(elem.name + ": route target " + route->element);
      }
    }
  }

  void prepare() {
    for (const auto& elem : arch_.elements) {
      element_order_.push_back(elem.name);
      ElementRuntime rt;
      rt.element = &elem;
      if (elem.behaviour) {
        std::set<std::string> names;
        for (const auto& abs : elem.behaviour->abstractions) names.insert(abs.name);
        for (const auto& abs : elem.behaviour->abstractions)
          check_body(elem, abs.body, names);
        for (const auto& entry : elem.behaviour->compose) {
          const Abstraction* target = nullptr;
          for (const auto& abs : elem.behaviour->abstractions)
            if (abs.name == entry) target = &abs;
          if (!target) unresolved(elem.name + ": compose of undeclared " + entry);
          Thread t;
          t.frames.push_back({&target->body, 0});
          rt.threads.push_back(std::move(t));
        }
      }
      runtime_.emplace(elem.name, std::move(rt));
    }

    for (const auto& ch : arch_.channels)
      channels_.push_back({endpoint_of(ch.from_path), endpoint_of(ch.to_path)});

    // A connection is environment-facing only if no channel references it on
    // this element or on any clone-related element; replica endpoints stay
    // reserved for redirected traffic.
    for (const auto& ch : channels_) {
      for (const auto* key : {&ch.src, &ch.dst}) {
        bound_.insert(*key);
        for (const auto& elem : arch_.elements)
          if (base_name(elem.name) == base_name(key->element))
            bound_.insert({elem.name, key->subpath});
      }
    }

    for (const auto& f : scenario_.faults) {
      if (!runtime_.count(f.element))
        throw Error("invalid-scenario", "fault element " + f.element + " does not exist");
      if (f.step > scenario_.max_steps)
        throw Error("invalid-scenario", "fault step beyond MAXSTEPS");
    }
    for (const auto& w : scenario_.workload) {
      if (!runtime_.count(w.element))
        throw Error("invalid-scenario", "workload element " + w.element + " does not exist");
      if (!runtime_[w.element].element->find_port(w.port))
        throw Error("invalid-scenario", "workload port " + w.element + "::" + w.port +
                                            " does not exist");
      if (w.step > scenario_.max_steps)
        throw Error("invalid-scenario", "workload step beyond MAXSTEPS");
    }
  }

  // --- per-round machinery ------------------------------------------------

  void inject_faults() {
    for (const auto& f : scenario_.faults) {
      if (f.step != round_) continue;
      runtime_[f.element].alive = !f.down;
      trace_.events.push_back({round_, f.element, EventKind::Fault,
                               f.down ? "down" : "up"});
    }
    for (const auto& w : scenario_.workload)
      if (w.step == round_) queues_[{w.element, w.port}].push_back(w);
  }

  bool alive(const std::string& elem) const {
    auto it = runtime_.find(elem);
    return it != runtime_.end() && it->second.alive;
  }

  /// Redirection at rendezvous resolution: a down endpoint element is
  /// replaced by a live replica named in some connector's route table.
  std::string effective_element(const std::string& elem) const {
    if (alive(elem)) return elem;
    for (const auto& name : element_order_) {
      const ElementRuntime& rt = runtime_.at(name);
      if (rt.element->kind != ElementKind::Connector) continue;
      for (const auto& [var, value] : rt.routes)
        if (is_clone_of(value, elem) && alive(value)) return value;
    }
    return elem;
  }

  std::string eval(const Expr& e, const Thread& t) const {
    switch (e.kind) {
      case Expr::Kind::Literal: return e.text;
      case Expr::Kind::Var: {
        auto it = t.env.find(e.text);
        return it == t.env.end() ? e.text : it->second;
      }
      case Expr::Kind::Call: {
        std::string out = e.text + "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i) out += ",";
          out += eval(e.args[i], t);
        }
        return out + ")";
      }
    }
    return "?";
  }

  static void pop_finished(Thread& t) {
    while (!t.frames.empty() && t.frames.back().idx >= t.frames.back().body->size())
      t.frames.pop_back();
  }

  const Stmt* current_stmt(Thread& t) const {
    pop_finished(t);
    if (t.frames.empty()) return nullptr;
    return &(*t.frames.back().body)[t.frames.back().idx];
  }

  /// A receive ready at (element, subpath)? Returns the thread index.
  std::optional<std::size_t> receiver_thread(ElementRuntime& rt,
                                             const std::string& subpath) {
    for (std::size_t i = 0; i < rt.threads.size(); ++i) {
      std::size_t idx = (rt.next_thread + i) % rt.threads.size();
      const Stmt* s = current_stmt(rt.threads[idx]);
      if (!s) continue;
      if (const auto* rcv = std::get_if<ReceiveStmt>(&s->node))
        if (conn_subpath(*rt.element, rcv->path, Direction::Incoming) == subpath)
          return idx;
    }
    return std::nullopt;
  }

  void advance(Thread& t) { ++t.frames.back().idx; }

  void deliver(ElementRuntime& rt, std::size_t thread_idx, const std::string& value) {
    Thread& t = rt.threads[thread_idx];
    const Stmt* s = current_stmt(t);
    const auto& rcv = std::get<ReceiveStmt>(s->node);
    t.env[rcv.var] = value;
    advance(t);
    rt.budget_spent = true;
    rt.next_thread = (thread_idx + 1) % rt.threads.size();
  }

  // --- element visit --------------------------------------------------------

  void visit(const std::string& name) {
    ElementRuntime& rt = runtime_[name];
    if (!rt.alive || rt.budget_spent || rt.threads.empty()) return;
    const std::size_t count = rt.threads.size();
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t idx = (rt.next_thread + i) % count;
      if (try_thread(rt, idx)) {
        rt.budget_spent = true;
        rt.next_thread = (idx + 1) % count;
        return;
      }
    }
  }

  /// Attempts one statement of one thread; returns false when the thread is
  /// waiting (communication not ready) so a sibling thread may run instead.
  bool try_thread(ElementRuntime& rt, std::size_t idx) {
    Thread& t = rt.threads[idx];
    const Stmt* s = current_stmt(t);
    if (!s) return false;

    struct V {
      Simulator& sim;
      ElementRuntime& rt;
      Thread& t;
      bool operator()(const SendStmt& x) { return sim.exec_send(rt, t, x); }
      bool operator()(const ReceiveStmt& x) { return sim.exec_receive(rt, t, x); }
      bool operator()(const AssignStmt& x) {
        t.env[x.var] = sim.eval(x.value, t);
        sim.advance(t);
        return true;
      }
      bool operator()(const IfStmt& x) {
        bool down = !sim.alive(x.cond.down_element);
        sim.advance(t);
        if (down && !x.then_stmt.empty())
          t.frames.push_back({&x.then_stmt, 0});
        return true;
      }
      bool operator()(const InvokeStmt& x) {
        sim.advance(t);
        Simulator::pop_finished(t); // collapse tail recursion
        const Behaviour& b = *rt.element->behaviour;
        for (const auto& abs : b.abstractions)
          if (abs.name == x.name) {
            t.frames.push_back({&abs.body, 0});
            break;
          }
        return true;
      }
      bool operator()(const ExternalStmt& x) {
        std::string detail = x.fn + "(";
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          if (i) detail += ",";
          detail += sim.eval(x.args[i], t);
        }
        detail += ")";
        sim.trace_.events.push_back(
            {sim.round_, rt.element->name, EventKind::External, detail});
        sim.advance(t);
        return true;
      }
      bool operator()(const RouteAssignStmt& x) {
        sim.advance(t);
        for (auto& [var, value] : rt.routes)
          if (var == x.route_var) {
            if (value == x.element) return true; // unchanged: no event
            value = x.element;
            sim.trace_.events.push_back({sim.round_, rt.element->name,
                                         EventKind::RouteUpdate,
                                         x.route_var + " := " + x.element});
            return true;
          }
        rt.routes.emplace_back(x.route_var, x.element);
        sim.trace_.events.push_back({sim.round_, rt.element->name,
                                     EventKind::RouteUpdate,
                                     x.route_var + " := " + x.element});
        return true;
      }
    };
    return std::visit(V{*this, rt, t}, s->node);
  }

  bool exec_send(ElementRuntime& rt, Thread& t, const SendStmt& x) {
    const std::string subpath = conn_subpath(*rt.element, x.path, Direction::Outgoing);
    const EndpointKey self{rt.element->name, subpath};
    const std::string value = eval(x.value, t);

    bool saw_down_partner = false;
    std::string down_partner;
    bool has_channel = false;
    for (const auto& ch : channels_) {
      EndpointKey src{effective_element(ch.src.element), ch.src.subpath};
      if (!(src == self)) continue;
      has_channel = true;
      std::string dst_elem = effective_element(ch.dst.element);
      if (!alive(dst_elem)) {
        saw_down_partner = true;
        down_partner = dst_elem;
        continue;
      }
      ElementRuntime& peer = runtime_[dst_elem];
      if (peer.budget_spent) continue; // partner already acted this round
      auto ridx = receiver_thread(peer, ch.dst.subpath);
      if (!ridx) continue;

      trace_.events.push_back({round_, rt.element->name, EventKind::Send,
                               subpath + " " + value});
      trace_.events.push_back({round_, dst_elem, EventKind::Receive,
                               ch.dst.subpath + " " + value});
      trace_.events.push_back({round_, rt.element->name, EventKind::Rendezvous,
                               rt.element->name + "::" + subpath + " -> " + dst_elem +
                                   "::" + ch.dst.subpath + " " + value});
      advance(t);
      deliver(peer, *ridx, value);
      return true;
    }

    if (saw_down_partner) {
      // the statement stays current; this round records the observation
      trace_.events.push_back({round_, rt.element->name, EventKind::Blocked,
                               subpath + " partner-down " + down_partner});
      return true;
    }
    if (!has_channel && !bound_.count(self)) {
      // environment-facing connection: the outside world always accepts
      trace_.events.push_back({round_, rt.element->name, EventKind::Send,
                               subpath + " " + value});
      trace_.events.push_back({round_, "env", EventKind::Receive, value});
      trace_.events.push_back({round_, rt.element->name, EventKind::Rendezvous,
                               rt.element->name + "::" + subpath + " -> env " + value});
      advance(t);
      return true;
    }
    return false; // waiting for a partner
  }

  bool exec_receive(ElementRuntime& rt, Thread& t, const ReceiveStmt& x) {
    const std::string subpath = conn_subpath(*rt.element, x.path, Direction::Incoming);
    const EndpointKey self{rt.element->name, subpath};

    bool has_channel = false;
    bool all_sources_down = true;
    std::string down_source;
    for (const auto& ch : channels_) {
      EndpointKey dst{effective_element(ch.dst.element), ch.dst.subpath};
      if (!(dst == self)) continue;
      has_channel = true;
      std::string src_elem = effective_element(ch.src.element);
      if (alive(src_elem))
        all_sources_down = false;
      else
        down_source = src_elem;
    }
    if (has_channel) {
      if (all_sources_down) {
        trace_.events.push_back({round_, rt.element->name, EventKind::Blocked,
                                 subpath + " partner-down " + down_source});
        return true;
      }
      return false; // a live sender will initiate the rendezvous
    }

    if (!bound_.count(self)) {
      // workload-fed connection
      std::size_t sep = subpath.find("::");
      std::string port = subpath.substr(0, sep);
      auto qit = queues_.find({rt.element->name, port});
      if (qit != queues_.end() && !qit->second.empty() &&
          qit->second.front().step <= round_) {
        WorkItem item = qit->second.front();
        qit->second.pop_front();
        trace_.events.push_back({round_, "env", EventKind::Send, item.message});
        trace_.events.push_back({round_, rt.element->name, EventKind::Receive,
                                 subpath + " " + item.message});
        trace_.events.push_back({round_, rt.element->name, EventKind::Rendezvous,
                                 "env -> " + rt.element->name + "::" + subpath + " " +
                                     item.message});
        t.env[x.var] = item.message;
        advance(t);
        return true;
      }
    }
    return false;
  }
};

} // namespace detail

/// Bounded deterministic simulation: executes up to max_steps scheduler
/// rounds over the top-level elements. Identical inputs produce identical
/// traces; exhausting the step budget simply ends the trace.
inline Trace simulate(const Architecture& arch, const SimScenario& scenario) {
  detail::Simulator sim(arch, scenario);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Trace properties
// ---------------------------------------------------------------------------

/// Predicate over trace events; unset fields match anything, `detail_substr`
/// matches by substring.
struct EventPattern {
  std::optional<std::string> element;
  std::optional<EventKind> kind;
  std::optional<std::string> detail_substr;

  bool matches(const TraceEvent& e) const {
    if (element && e.element != *element) return false;
    if (kind && e.kind != *kind) return false;
    if (detail_substr && e.detail.find(*detail_substr) == std::string::npos)
      return false;
    return true;
  }
};

/// Every request-matching event is followed by a response-matching event at
/// most `within_steps` scheduler rounds later.
struct RespondsProp {
  EventPattern request;
  EventPattern response;
  int within_steps = 0;
};
struct NeverProp {
  EventPattern pattern;
};
/// After every trigger-matching event, an event-matching event eventually
/// occurs in the remaining trace.
struct EventuallyAfterProp {
  EventPattern trigger;
  EventPattern event;
};

using TraceProperty = std::variant<RespondsProp, NeverProp, EventuallyAfterProp>;

enum class Verdict { Pass, Fail };

inline Verdict check_trace(const Trace& trace, const TraceProperty& prop) {
  struct V {
    const Trace& trace;
    Verdict operator()(const RespondsProp& p) const {
      for (std::size_t i = 0; i < trace.events.size(); ++i) {
        if (!p.request.matches(trace.events[i])) continue;
        bool answered = false;
        for (std::size_t j = i + 1; j < trace.events.size(); ++j) {
          if (trace.events[j].step > trace.events[i].step + p.within_steps) break;
          if (p.response.matches(trace.events[j])) {
            answered = true;
            break;
          }
        }
        if (!answered) return Verdict::Fail;
      }
      return Verdict::Pass;
    }
    Verdict operator()(const NeverProp& p) const {
      for (const auto& e : trace.events)
        if (p.pattern.matches(e)) return Verdict::Fail;
      return Verdict::Pass;
    }
    Verdict operator()(const EventuallyAfterProp& p) const {
      for (std::size_t i = 0; i < trace.events.size(); ++i) {
        if (!p.trigger.matches(trace.events[i])) continue;
        bool found = false;
        for (std::size_t j = i + 1; j < trace.events.size(); ++j)
          if (p.event.matches(trace.events[j])) {
            found = true;
            break;
          }
        if (!found) return Verdict::Fail;
      }
      return Verdict::Pass;
    }
  };
  return std::visit(V{trace}, prop);
}

} // namespace archweave
