#pragma once

#include <optional>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/program.hpp"
#include "partypes/source.hpp"

namespace partypes {

template <typename T>
struct ParseResult {
  std::optional<T> result;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return result.has_value(); }
  const T& operator*() const { return *result; }
  const T* operator->() const { return &*result; }
};

/// Parse a `.pt` protocol source. On success the AST is scope-checked and
/// block-normalized; pretty-printing it reparses to an equal AST.
ParseResult<GlobalProtocol> parse_protocol(const std::string& text,
                                           const std::string& filename = "<protocol>");

/// Parse a `.mpp` SPMD program source. Statically scoped; `rank` and `size`
/// are read-only built-ins, externs must precede the body.
ParseResult<Program> parse_program(const std::string& text,
                                   const std::string& filename = "<program>");

}  // namespace partypes
