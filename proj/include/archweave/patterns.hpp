#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "archweave/parser.hpp"
#include "archweave/pattern.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Pattern instantiation
// ---------------------------------------------------------------------------

/// Names a pattern introduces into the architecture (include targets and
/// replicate clones), after substituting the scope variable.
inline std::vector<std::string> introduced_names(const ConstraintPattern& pat,
                                                 const std::string& target) {
  Bindings bindings;
  if (const auto* block = pat.element_block())
    bindings.push_back({block->var, target, true});
  std::vector<std::string> out;
  for (const auto& block : pat.blocks)
    for (const auto& action : block.actions) {
      AtomicAction ground = substitute(action, bindings);
      if (const auto* inc = std::get_if<IncludeAction>(&ground.node))
        out.push_back(inc->element.name);
      else if (const auto* rep = std::get_if<ReplicateAction>(&ground.node))
        out.push_back(rep->clone_name);
    }
  return out;
}

/// Binds the pattern's element-scope variable to `target` and returns the
/// ground action list. `reserved` extends the collision check with names a
/// surrounding plan has already introduced.
inline std::vector<AtomicAction> instantiate(
    const ConstraintPattern& pat, const std::string& target,
    const Architecture& arch, const std::set<std::string>& reserved = {}) {
  if (!arch.find_element(target)) throw Error("unresolved-path", target);

  Bindings bindings;
  std::vector<std::string> arch_vars;
  for (const auto& block : pat.blocks) {
    if (block.scope == BlockScope::Element)
      bindings.push_back({block.var, target, true});
    else
      arch_vars.push_back(block.var);
  }

  auto check_arch_var = [&](const std::string& ident) {
    for (const auto& v : arch_vars)
      if (ident == v)
        throw Error("unbound-variable",
                    "architecture variable '" + v + "' used as an element name");
  };

  std::vector<AtomicAction> out;
  for (const auto& block : pat.blocks)
    for (const auto& action : block.actions) {
      AtomicAction ground = substitute(action, bindings);
      struct V {
        decltype(check_arch_var)& check;
        void operator()(const IncludeAction& x) const { check(x.element.name); }
        void operator()(const ReplicateAction& x) const {
          check(x.target.front());
          check(x.clone_name);
        }
        void operator()(const UnifyAction& x) const {
          check(x.out_path.front());
          check(x.in_path.front());
        }
        void operator()(const AttachAction& x) const {
          check(x.a);
          check(x.b);
        }
        void operator()(const RenameAction& x) const {
          check(x.target.front());
          check(x.new_name);
        }
        void operator()(const RemoveAction& x) const { check(x.target.front()); }
      };
      std::visit(V{check_arch_var}, ground.node);
      out.push_back(std::move(ground));
    }

  for (const auto& name : introduced_names(pat, target))
    if (arch.find_element(name) || reserved.count(name))
      throw Error("name-collision", name);

  return out;
}

/// The pattern's `provides` guarantees with the scope variable bound.
inline std::vector<Condition> instantiate_provides(const ConstraintPattern& pat,
                                                   const std::string& target) {
  Bindings bindings;
  if (const auto* block = pat.element_block())
    bindings.push_back({block->var, target, true});
  std::vector<Condition> out;
  for (const auto& c : pat.provides) out.push_back(substitute(c, bindings));
  return out;
}

// ---------------------------------------------------------------------------
// Shipped library sources
// ---------------------------------------------------------------------------

// The library is data: these sources are the same text shipped as
// corpus/patterns/*.gecm|*.getm, embedded so the builtin library needs no
// filesystem access. A test keeps file and constant in sync.

namespace builtin_sources {

inline constexpr const char* faulttolerance_gecm =
    R"(-- fault-tolerance pattern: replicate the constrained service and interpose
-- an availability-checking connector that re-routes to the replica.
faulttolerance is qualityOfServiceProperty {
  on a:architecture actions {
    include FTConnector is connector {
      types is {
        type Data is any .
      }
      ports is {
        archetype genericGridInterfaceComsP0 is port {
          incoming is {
            genericGridInterfaceIncC0 is connection ( Data ) .
          }
        }
      }
      behaviour is {
        recursive value availabilityChecking is abstraction();
        {
          if (serviceDown(b)) value serviceRedirectionURL := bClone0 ;
          availabilityChecking() ;
        }
        compose {
          availabilityChecking()
        }
      }
    }
  }
  on b:architecturalElement actions {
    replicate b to bClone0 ;
    unify b::ComsP0::ComsOutC0 with FTConnector::genericGridInterfaceComsP0::genericGridInterfaceIncC0 ;
  }
  provides is {
    exists(bClone0) and exists(FTConnector) and channel_between(b::ComsP0::ComsOutC0, FTConnector::genericGridInterfaceComsP0::genericGridInterfaceIncC0)
  }
  conflicts is { faulttolerance , loadbalancing }
}
)";

inline constexpr const char* loadbalancing_gecm =
    R"(-- origin: extrapolated
-- load-balancing pattern: replicate the constrained service and include a
-- dispatcher connector that spreads requests across the replicas.
loadbalancing is qualityOfServiceProperty {
  on a:architecture actions {
    include LBConnector is connector {
      behaviour is {
        recursive value dispatchLoop is abstraction();
        {
          roundRobinDispatch(b, bClone0) ;
          dispatchLoop() ;
        }
        compose {
          dispatchLoop()
        }
      }
    }
  }
  on b:architecturalElement actions {
    replicate b to bClone0 ;
  }
  provides is {
    exists(bClone0) and exists(LBConnector)
  }
  conflicts is { loadbalancing , faulttolerance }
}
)";

inline constexpr const char* platform_a_getm =
    R"(-- synthetic platform binding profile A; exercises the platform-adaptation
-- stage without real middleware calls. Written against the shipped mdeGrid
-- family: the grid-side partner is DataCacheHandler.
PLATFORM_A is platformProperty {
  on a:architecture actions {
    include GliteInterface is component {
      types is {
        type Data is any .
        type resultSet is tuple [String, String] .
      }
      ports is {
        archetype GridP0 is port {
          incoming is {
            GridInC0 is connection ( Data ) .
          }
          outgoing is {
            GridOutC0 is connection ( resultSet ) .
          }
        }
      }
      behaviour is {
        recursive value gridQueryService is abstraction();
        {
          via GridP0::GridInC0 receive q : Data ;
          gliteAuthenticate(q) ;
          res := gliteSubmit(q) ;
          via GridP0::GridOutC0 send res ;
          gridQueryService() ;
        }
        compose {
          gridQueryService()
        }
      }
    }
  }
  on b:architecturalElement actions {
    unify DataCacheHandler::ComsP0::ComsOutC0 with GliteInterface::GridP0::GridInC0 ;
    unify GliteInterface::GridP0::GridOutC0 with DataCacheHandler::ComsP0::ComsInC0 ;
    attach DataCacheHandler to GliteInterface ;
    remove b ;
  }
  provides is {
    exists(GliteInterface) and not exists(b)
  }
  conflicts is { PLATFORM_B }
}
)";

inline constexpr const char* platform_b_getm =
    R"(-- synthetic platform binding profile B; exercises the platform-adaptation
-- stage without real middleware calls. Written against the shipped mdeGrid
-- family: the grid-side partner is DataCacheHandler.
PLATFORM_B is platformProperty {
  on a:architecture actions {
    include GlobusInterface is component {
      types is {
        type Data is any .
        type resultSet is tuple [String, String] .
      }
      ports is {
        archetype GridP0 is port {
          incoming is {
            GridInC0 is connection ( Data ) .
          }
          outgoing is {
            GridOutC0 is connection ( resultSet ) .
          }
        }
      }
      behaviour is {
        recursive value gridQueryService is abstraction();
        {
          via GridP0::GridInC0 receive q : Data ;
          globusDelegate(q) ;
          res := globusSubmit(q) ;
          via GridP0::GridOutC0 send res ;
          gridQueryService() ;
        }
        compose {
          gridQueryService()
        }
      }
    }
  }
  on b:architecturalElement actions {
    unify DataCacheHandler::ComsP0::ComsOutC0 with GlobusInterface::GridP0::GridInC0 ;
    unify GlobusInterface::GridP0::GridOutC0 with DataCacheHandler::ComsP0::ComsInC0 ;
    attach DataCacheHandler to GlobusInterface ;
    remove b ;
  }
  provides is {
    exists(GlobusInterface) and not exists(b)
  }
  conflicts is { PLATFORM_A }
}
)";

inline const std::map<std::string, const char*>& files() {
  static const std::map<std::string, const char*> m = {
      {"faulttolerance.gecm", faulttolerance_gecm},
      {"loadbalancing.gecm", loadbalancing_gecm},
      {"platform_a.getm", platform_a_getm},
      {"platform_b.getm", platform_b_getm},
  };
  return m;
}

} // namespace builtin_sources

// ---------------------------------------------------------------------------
// Library construction
// ---------------------------------------------------------------------------

inline PatternLibrary library_from_sources(
    const std::vector<std::pair<std::string, std::string>>& sources) {
  PatternLibrary lib;
  for (const auto& [origin, text] : sources) {
    auto parsed = parse_pattern(text, origin);
    if (!parsed.ok()) {
      std::string msg = origin;
      for (const auto& d : parsed.diagnostics)
        msg += " " + std::to_string(d.line) + ":" + std::to_string(d.column) + " " +
               d.message;
      throw Error("pattern-parse-failed", msg);
    }
    const std::string name = parsed->name;
    if (!lib.patterns.emplace(name, std::move(*parsed)).second)
      throw Error("duplicate-pattern", name);
  }
  rebuild_rules(lib);
  return lib;
}

/// The shipped library: fault tolerance and load balancing (QoS) plus the two
/// synthetic platform profiles, with their compatibility rules.
inline const PatternLibrary& builtin_library() {
  static const PatternLibrary lib = [] {
    std::vector<std::pair<std::string, std::string>> sources;
    for (const auto& [name, text] : builtin_sources::files())
      sources.emplace_back(name, text);
    return library_from_sources(sources);
  }();
  return lib;
}

/// Loads every `.gecm`/`.getm` file in a directory, in filename order.
inline PatternLibrary load_library(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> sources;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".gecm" || ext == ".getm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::ostringstream text;
    text << in.rdbuf();
    sources.emplace_back(f.string(), text.str());
  }
  return library_from_sources(sources);
}

} // namespace archweave
