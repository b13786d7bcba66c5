#pragma once

#include <string>
#include <vector>

namespace partypes {

/// Half-open is a lie here: positions are 1-based and inclusive on both ends.
struct SourceSpan {
  std::string file;
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;

  std::string to_string() const;
};

enum class Severity { Error, Warning };

/// A finding attached to a source location. Codes are stable identifiers
/// (kebab-case) that tools may match on; messages are free text.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  SourceSpan span;

  std::string to_string() const;
};

std::string render_diagnostics(const std::vector<Diagnostic>& diags);

}  // namespace partypes
