#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace archweave {

/// Operation failure carrying a stable machine-readable code
/// (e.g. "unresolved-path", "precondition-failed") plus free-form detail.
class Error : public std::runtime_error {
public:
  Error(std::string code, std::string detail)
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string code_;
  std::string detail_;
};

/// Parser-level diagnostic with a source position.
struct ParseDiagnostic {
  int line = 0;
  int column = 0;
  std::string message;
  std::vector<std::string> expected;

  bool operator==(const ParseDiagnostic&) const = default;
};

inline std::string format_diagnostic(const std::string& file,
                                     const ParseDiagnostic& d) {
  return file + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) +
         ": error: " + d.message;
}

} // namespace archweave
