#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "partypes/conform.hpp"
#include "partypes/project.hpp"
#include "partypes/simulate.hpp"
#include "partypes/wellformed.hpp"

namespace partypes {

using Json = nlohmann::json;

Json to_json(const SourceSpan& span);
Json to_json(const Diagnostic& d);
Json to_json(const WellformednessReport& r);
Json to_json(const LocalAction& a);
Json expansion_to_json(const std::string& protocol, int size,
                       const std::vector<std::vector<LocalAction>>& table);
Json to_json(const Failure& f);
Json to_json(const ConformanceReport& r);
Json to_json(const DeadlockReport& r);

Json value_to_json(const Value& v);

/// Extern bindings file: {"size-defaults": {...}, "per-size": {"4": {...}}}
/// mapping extern names to numbers or (nested) arrays.
struct BindingsSpec {
  Json size_defaults = Json::object();
  std::map<int, Json> per_size;
};

/// Throws std::runtime_error on malformed documents.
BindingsSpec parse_bindings_spec(const std::string& text);

/// Materializes bindings for one size, converting JSON numbers according to
/// the declared extern datatypes (integers are accepted for float slots).
/// Throws PreconditionError when an extern is missing or has the wrong shape.
Bindings bindings_for_size(const BindingsSpec& spec, int size, const Program& prog);

}  // namespace partypes
