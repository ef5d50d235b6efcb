// archweave: the transformation-pipeline driver.
//
//   archweave run      parse -> validate -> plan -> refine (QoS) -> preserve
//                      -> refine (platform) -> simulate -> codegen -> deploy
//   archweave validate check a single source unit
//   archweave render   canonical pretty-print of any dialect
//   archweave diff     structural diff of two architecture files

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "archweave/archweave.hpp"

namespace {

using namespace archweave;

int cmd_validate(const std::string& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  SourceUnit unit = make_source_unit(text, file);
  auto report = [&](const auto& parsed) -> int {
    for (const auto& d : parsed.diagnostics)
      std::cerr << format_diagnostic(file, d) << "\n";
    for (const auto& d : parsed.semantic)
      std::cerr << file << ": error: " << d.rule << " at " << d.path.text() << ": "
                << d.message << "\n";
    if (!parsed.diagnostics.empty()) return kExitParse;
    if (!parsed.semantic.empty()) return kExitValidate;
    return kPipelineOk;
  };
  switch (unit.kind) {
    case UnitKind::Architecture: return report(parse_architecture(unit.text, file));
    case UnitKind::Pattern: return report(parse_pattern(unit.text, file));
    case UnitKind::RefinementDef: return report(parse_refinement_def(unit.text, file));
    case UnitKind::ResourceInventory: return report(parse_inventory(unit));
    case UnitKind::CodegenMapping: return report(parse_codegen_mapping(unit));
    case UnitKind::Unknown:
      std::cerr << file << ":1:1: error: unrecognized unit kind\n";
      return kExitParse;
  }
  return kExitParse;
}

int cmd_render(const std::string& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  SourceUnit unit = make_source_unit(text, file);
  auto emit = [&](const auto& parsed, auto&& renderer) -> int {
    if (!parsed.ok()) {
      for (const auto& d : parsed.diagnostics)
        std::cerr << format_diagnostic(file, d) << "\n";
      for (const auto& d : parsed.semantic)
        std::cerr << file << ": error: " << d.rule << " at " << d.path.text() << "\n";
      return kExitParse;
    }
    std::cout << renderer(*parsed) << "\n";
    return kPipelineOk;
  };
  switch (unit.kind) {
    case UnitKind::Architecture:
      return emit(parse_architecture(unit.text, file),
                  [](const Architecture& a) { return render(a); });
    case UnitKind::Pattern:
      return emit(parse_pattern(unit.text, file),
                  [](const ConstraintPattern& p) { return render_pattern(p); });
    case UnitKind::RefinementDef:
      return emit(parse_refinement_def(unit.text, file),
                  [](const RefinementDefinition& d) { return render_refinement_def(d); });
    case UnitKind::ResourceInventory:
      return emit(parse_inventory(unit),
                  [](const ResourceInventory& i) { return render_inventory(i); });
    case UnitKind::CodegenMapping:
      return emit(parse_codegen_mapping(unit), [](const CodegenMappingDecl& m) {
        return render_codegen_mapping_decl(m);
      });
    case UnitKind::Unknown:
      std::cerr << file << ":1:1: error: unrecognized unit kind\n";
      return kExitParse;
  }
  return kExitParse;
}

int cmd_diff(const std::string& a, const std::string& b) {
  try {
    DiffReport report = diff_models(a, b);
    std::cout << render_diff(report);
    return report.empty() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"architecture-centric model transformation toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run the transformation pipeline");
  PipelineConfig config;
  std::string input, patterns, gemm, germ, scenario, out_dir = "out";
  run->add_option("--input", input, "architecture source (.geim)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--patterns", patterns, "pattern library directory")
      ->envname("ARCHWEAVE_PATTERNS");
  run->add_option("--platform", config.platform, "platform pattern name")->required();
  run->add_option("--gemm", gemm, "codegen mapping descriptor")->required();
  run->add_option("--germ", germ, "resource inventory file")->required();
  run->add_option("--scenario", scenario, "simulation scenario file");
  run->add_option("--out", out_dir, "artifact output directory");
  run->add_option("--stop-after", config.stop_after,
                  "truncate after stage: parse|validate|plan|qos|preserve|"
                  "platform|simulate|codegen|deploy");

  // validate / render / diff
  std::string validate_file, render_file, diff_a, diff_b;
  auto* validate_cmd = app.add_subcommand("validate", "check one source unit");
  validate_cmd->add_option("file", validate_file, "source file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* render_cmd = app.add_subcommand("render", "canonical pretty-print");
  render_cmd->add_option("file", render_file, "source file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* diff_cmd = app.add_subcommand("diff", "structural diff of two models");
  diff_cmd->add_option("a", diff_a, "first model")->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("b", diff_b, "second model")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    config.input = input;
    if (!patterns.empty()) config.patterns_dir = patterns;
    config.gemm = gemm;
    config.germ = germ;
    if (!scenario.empty()) config.scenario = scenario;
    config.out_dir = out_dir;
    return run_pipeline(config);
  }
  if (validate_cmd->parsed()) return cmd_validate(validate_file);
  if (render_cmd->parsed()) return cmd_render(render_file);
  if (diff_cmd->parsed()) return cmd_diff(diff_a, diff_b);
  return 0;
}
