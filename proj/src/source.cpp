#include "partypes/source.hpp"

#include <sstream>

namespace partypes {

std::string SourceSpan::to_string() const {
  std::ostringstream os;
  os << (file.empty() ? "<none>" : file) << ":" << start_line << ":" << start_col;
  return os.str();
}

std::string Diagnostic::to_string() const {
  std::ostringstream os;
  os << span.to_string() << ": " << (severity == Severity::Error ? "error" : "warning") << "["
     << code << "]: " << message;
  return os.str();
}

std::string render_diagnostics(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  for (const auto& d : diags) os << d.to_string() << "\n";
  return os.str();
}

}  // namespace partypes
