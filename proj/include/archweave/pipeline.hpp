#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "archweave/emit.hpp"
#include "archweave/parser.hpp"
#include "archweave/patterns.hpp"
#include "archweave/planner.hpp"
#include "archweave/refine.hpp"
#include "archweave/render.hpp"
#include "archweave/sim.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Structural diff
// ---------------------------------------------------------------------------

struct DiffReport {
  std::vector<std::string> added_elements;
  std::vector<std::string> removed_elements;
  std::vector<std::pair<std::string, std::string>> renamed_elements;
  std::vector<std::string> changed_elements; // same name, different definition
  std::vector<Channel> added_channels;
  std::vector<Channel> removed_channels;
  std::vector<Attachment> added_attachments;
  std::vector<Attachment> removed_attachments;

  bool empty() const {
    return added_elements.empty() && removed_elements.empty() &&
           renamed_elements.empty() && changed_elements.empty() &&
           added_channels.empty() && removed_channels.empty() &&
           added_attachments.empty() && removed_attachments.empty();
  }
};

namespace detail {

inline std::string element_signature(const ArchElement& e) {
  ArchElement copy = e;
  copy.name = "";
  copy.annotations.clear();
  // a cheap structural fingerprint: the canonical rendering sans name
  Printer p;
  render_element(p, copy);
  return p.out;
}

} // namespace detail

/// Reports element/channel/attachment differences between two models. A
/// removed and an added element with identical structure are paired up as a
/// rename. Empty report iff the models are structurally equal.
inline DiffReport diff_architectures(const Architecture& a, const Architecture& b) {
  DiffReport report;

  std::vector<const ArchElement*> removed, added;
  for (const auto& e : a.elements)
    if (!b.find_element(e.name)) removed.push_back(&e);
  for (const auto& e : b.elements) {
    if (const ArchElement* old = a.find_element(e.name)) {
      if (!(*old == e)) report.changed_elements.push_back(e.name);
    } else {
      added.push_back(&e);
    }
  }

  std::vector<bool> added_taken(added.size(), false);
  for (const ArchElement* r : removed) {
    bool matched = false;
    for (std::size_t i = 0; i < added.size(); ++i) {
      if (added_taken[i]) continue;
      if (detail::element_signature(*r) == detail::element_signature(*added[i])) {
        report.renamed_elements.emplace_back(r->name, added[i]->name);
        added_taken[i] = true;
        matched = true;
        break;
      }
    }
    if (!matched) report.removed_elements.push_back(r->name);
  }
  for (std::size_t i = 0; i < added.size(); ++i)
    if (!added_taken[i]) report.added_elements.push_back(added[i]->name);

  auto channel_in = [](const std::vector<Channel>& list, const Channel& ch) {
    for (const auto& c : list)
      if (c == ch) return true;
    return false;
  };
  for (const auto& ch : a.channels)
    if (!channel_in(b.channels, ch)) report.removed_channels.push_back(ch);
  for (const auto& ch : b.channels)
    if (!channel_in(a.channels, ch)) report.added_channels.push_back(ch);

  auto link_in = [](const std::vector<Attachment>& list, const Attachment& l) {
    for (const auto& x : list)
      if ((x.a == l.a && x.b == l.b) || (x.a == l.b && x.b == l.a)) return true;
    return false;
  };
  for (const auto& l : a.top_links)
    if (!link_in(b.top_links, l)) report.removed_attachments.push_back(l);
  for (const auto& l : b.top_links)
    if (!link_in(a.top_links, l)) report.added_attachments.push_back(l);

  return report;
}

inline std::string render_diff(const DiffReport& d) {
  std::string out;
  for (const auto& e : d.added_elements) out += "+element " + e + "\n";
  for (const auto& e : d.removed_elements) out += "-element " + e + "\n";
  for (const auto& [from, to] : d.renamed_elements)
    out += "~element " + from + " -> " + to + "\n";
  for (const auto& e : d.changed_elements) out += "!element " + e + "\n";
  for (const auto& ch : d.added_channels)
    out += "+channel " + ch.from_path.text() + " -> " + ch.to_path.text() + "\n";
  for (const auto& ch : d.removed_channels)
    out += "-channel " + ch.from_path.text() + " -> " + ch.to_path.text() + "\n";
  for (const auto& l : d.added_attachments) out += "+attach " + l.a + " " + l.b + "\n";
  for (const auto& l : d.removed_attachments) out += "-attach " + l.a + " " + l.b + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// File loading
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out << content;
}

/// Resolves a mapping descriptor's template references against its directory.
inline CodegenMapping load_codegen_mapping(const std::filesystem::path& descriptor) {
  auto parsed = parse_codegen_mapping(
      SourceUnit{UnitKind::CodegenMapping, read_file(descriptor), descriptor.string()});
  if (!parsed.ok()) {
    std::string msg;
    for (const auto& d : parsed.diagnostics)
      msg += format_diagnostic(descriptor.string(), d) + "\n";
    throw Error("mapping-parse-failed", msg);
  }
  CodegenMapping mapping;
  mapping.name = parsed->name;
  mapping.target_label = parsed->target_label;
  mapping.extension = parsed->extension;
  for (const auto& [key, file] : parsed->template_files)
    mapping.templates[key] = read_file(descriptor.parent_path() / file);
  return mapping;
}

inline ResourceInventory load_inventory(const std::filesystem::path& path) {
  auto parsed = parse_inventory(
      SourceUnit{UnitKind::ResourceInventory, read_file(path), path.string()});
  if (!parsed.ok()) {
    std::string msg;
    for (const auto& d : parsed.diagnostics)
      msg += format_diagnostic(path.string(), d) + "\n";
    throw Error("inventory-parse-failed", msg);
  }
  return *parsed;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PipelineConfig {
  std::filesystem::path input;
  std::optional<std::filesystem::path> patterns_dir; // builtin library if unset
  std::string platform;                              // platform pattern name
  std::filesystem::path gemm;                        // mapping descriptor
  std::filesystem::path germ;                        // resource inventory
  std::optional<std::filesystem::path> scenario;
  std::filesystem::path out_dir = "out";
  std::string stop_after; // empty = run everything
};

/// Exit codes double as stage identifiers: the first failing stage's code is
/// the process status.
enum PipelineExit : int {
  kPipelineOk = 0,
  kExitParse = 1,
  kExitValidate = 2,
  kExitPlan = 3,
  kExitRefine = 4,
  kExitPreserve = 5,
  kExitSimulate = 6,
  kExitCodegen = 7,
  kExitDeploy = 8,
};

namespace detail {

inline const std::vector<std::pair<std::string, int>>& stage_order() {
  static const std::vector<std::pair<std::string, int>> stages = {
      {"parse", 1},  {"validate", 1}, {"plan", 2},     {"qos", 3},   {"preserve", 4},
      {"platform", 5}, {"simulate", 6}, {"codegen", 7}, {"deploy", 8},
  };
  return stages;
}

inline int stage_rank(const std::string& name) {
  for (const auto& [n, rank] : stage_order())
    if (n == name) return rank;
  return -1;
}

} // namespace detail

/// Runs the full transformation pipeline, writing one artifact per completed
/// stage into config.out_dir. Artifacts of completed stages are kept even
/// when a later stage fails.
inline int run_pipeline(const PipelineConfig& config, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  const fs::path out = config.out_dir;

  int stop_rank = config.stop_after.empty() ? 1 << 20
                                            : detail::stage_rank(config.stop_after);
  if (stop_rank < 0) {
    log << "error: unknown stage '" << config.stop_after << "' for --stop-after\n";
    return kExitParse;
  }
  auto stop_before = [&](int rank) { return rank > stop_rank; };

  // stage 1: parse + validate
  std::string source;
  try {
    source = read_file(config.input);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitParse;
  }
  auto parsed = parse_architecture(source, config.input.string());
  if (!parsed.diagnostics.empty()) {
    for (const auto& d : parsed.diagnostics)
      log << format_diagnostic(config.input.string(), d) << "\n";
    return kExitParse;
  }
  if (!parsed.ok()) {
    for (const auto& d : parsed.semantic)
      log << config.input.string() << ": error: " << d.rule << " at " << d.path.text()
          << ": " << d.message << "\n";
    return kExitValidate;
  }
  Architecture geim = *parsed;
  fs::create_directories(out);
  write_file(out / "01.geim", render(geim) + "\n");
  if (stop_before(2)) return kPipelineOk;

  // stage 2: plan
  PatternLibrary lib;
  try {
    lib = config.patterns_dir ? load_library(*config.patterns_dir) : builtin_library();
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitPlan;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitPlan;
  }
  TransformationPlan qos_plan;
  try {
    qos_plan = plan(geim, lib);
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitPlan;
  }
  write_file(out / "02.plan", serialize_plan(qos_plan));
  write_file(out / "02.plan.json", serialize_plan_json(qos_plan));
  if (stop_before(3)) return kPipelineOk;

  // stage 3: apply QoS plan -> GEIM'
  Architecture geim_prime;
  try {
    geim_prime = apply_plan(geim, qos_plan);
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitRefine;
  }
  write_file(out / "03.geim-prime", render(geim_prime) + "\n");
  if (stop_before(4)) return kPipelineOk;

  // stage 4: verify preservation GEIM vs GEIM'
  PreservationReport preservation = verify_preservation(geim, geim_prime);
  write_file(out / "04.preservation.txt", render_preservation_report(preservation));
  if (!preservation.passed) {
    log << "error: preservation check failed\n";
    return kExitPreserve;
  }
  if (stop_before(5)) return kPipelineOk;

  // stage 5: platform adaptation -> GESM
  Architecture gesm;
  try {
    if (!lib.find(config.platform))
      throw Error("unknown-constraint-ref", "platform pattern " + config.platform);
    std::vector<ConstraintMapping> platform_mappings;
    int index = 0;
    for (const auto& e : geim_prime.elements)
      if (e.role == RoleTag::GenericInterface)
        // platform adaptation rewires the interface's direct partners: range 2
        platform_mappings.push_back({e.name, config.platform, 1, 2, index++});
    TransformationPlan platform_plan =
        plan_for_mappings(geim_prime, lib, std::move(platform_mappings));
    gesm = apply_plan(geim_prime, platform_plan);
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitRefine;
  }
  write_file(out / "05.gesm", render(gesm) + "\n");
  if (stop_before(6)) return kPipelineOk;

  // stage 6: bounded simulation (optional)
  if (config.scenario) {
    try {
      SimScenario scenario = parse_scenario(read_file(*config.scenario));
      Trace trace = simulate(gesm, scenario);
      write_file(out / "06.trace.txt", render_trace(trace));
    } catch (const Error& e) {
      log << "error: " << e.code() << ": " << e.detail() << "\n";
      return kExitSimulate;
    }
  }
  if (stop_before(7)) return kPipelineOk;

  // stage 7: code skeletons
  try {
    CodegenMapping mapping = load_codegen_mapping(config.gemm);
    FileSet files = generate_code(gesm, mapping);
    for (const auto& [path, content] : files.files)
      write_file(out / "07.gesa" / path, content);
    write_file(out / "07.gesa" / "MANIFEST.sha256", files.manifest);
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitCodegen;
  }
  if (stop_before(8)) return kPipelineOk;

  // stage 8: deployment plan
  try {
    ResourceInventory inv = load_inventory(config.germ);
    DeploymentPlan plan = plan_deployment(gesm, inv);
    write_file(out / "08.gedm.txt", render_deployment(gesm, plan));
  } catch (const Error& e) {
    log << "error: " << e.code() << ": " << e.detail() << "\n";
    return kExitDeploy;
  }
  return kPipelineOk;
}

/// Structural diff between two architecture files.
inline DiffReport diff_models(const std::filesystem::path& a,
                              const std::filesystem::path& b) {
  auto pa = parse_architecture(read_file(a), a.string());
  auto pb = parse_architecture(read_file(b), b.string());
  auto raise = [](const std::filesystem::path& p, const auto& parsed) {
    std::string msg;
    for (const auto& d : parsed.diagnostics) msg += format_diagnostic(p.string(), d) + "\n";
    for (const auto& d : parsed.semantic)
      msg += p.string() + ": error: " + d.rule + " at " + d.path.text() + "\n";
    throw Error("parse-failed", msg);
  };
  if (!pa.ok()) raise(a, pa);
  if (!pb.ok()) raise(b, pb);
  return diff_architectures(*pa, *pb);
}

} // namespace archweave
