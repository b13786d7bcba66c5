#pragma once

#include <string>

#include "partypes/ast.hpp"
#include "partypes/program.hpp"

namespace partypes {

std::string pretty(const IndexTerm& t);
std::string pretty(const Prop& p);

/// Re-sugars natural, positive and D[n] when the structure matches the
/// canonical desugaring exactly (same binder name included).
std::string pretty(const Datatype& d);

std::string pretty(const ProtocolTerm& t, int indent = 0);
std::string pretty_protocol(const GlobalProtocol& p);

std::string pretty(const Expr& e);
std::string pretty_program(const Program& p);

}  // namespace partypes
