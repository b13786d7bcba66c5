#include "partypes/json_io.hpp"

#include "partypes/printer.hpp"

namespace partypes {

Json to_json(const SourceSpan& span) {
  return Json{{"file", span.file},
              {"startLine", span.start_line},
              {"startCol", span.start_col},
              {"endLine", span.end_line},
              {"endCol", span.end_col}};
}

Json to_json(const Diagnostic& d) {
  return Json{{"severity", d.severity == Severity::Error ? "error" : "warning"},
              {"code", d.code},
              {"message", d.message},
              {"span", to_json(d.span)}};
}

Json to_json(const WellformednessReport& r) {
  Json sizes = Json::array();
  for (const auto& v : r.per_size) {
    Json diags = Json::array();
    for (const auto& d : v.diagnostics) diags.push_back(to_json(d));
    const char* status = v.status == SizeStatus::Ok        ? "ok"
                         : v.status == SizeStatus::Excluded ? "excluded"
                                                            : "error";
    sizes.push_back(Json{{"size", v.size}, {"status", status}, {"diagnostics", diags}});
  }
  Json out{{"protocol", r.protocol},
           {"minSize", r.range.min},
           {"maxSize", r.range.max},
           {"sizes", sizes}};
  out["inferredMinSize"] = r.inferred_min_size ? Json(*r.inferred_min_size) : Json(nullptr);
  return out;
}

Json to_json(const LocalAction& a) {
  Json out;
  switch (a.kind) {
    case LocalAction::Kind::Send: out["kind"] = "send"; out["peer"] = a.peer; break;
    case LocalAction::Kind::Recv: out["kind"] = "recv"; out["peer"] = a.peer; break;
    case LocalAction::Kind::Broadcast:
      out["kind"] = "broadcast";
      out["root"] = a.peer;
      out["var"] = a.var;
      break;
    case LocalAction::Kind::Scatter: out["kind"] = "scatter"; out["root"] = a.peer; break;
    case LocalAction::Kind::Gather: out["kind"] = "gather"; out["root"] = a.peer; break;
    case LocalAction::Kind::Reduce:
      out["kind"] = "reduce";
      out["root"] = a.peer;
      out["op"] = to_string(a.op);
      break;
    case LocalAction::Kind::Allgather: out["kind"] = "allgather"; out["var"] = a.var; break;
    case LocalAction::Kind::Allreduce:
      out["kind"] = "allreduce";
      out["op"] = to_string(a.op);
      out["var"] = a.var;
      break;
    case LocalAction::Kind::Apply: out["kind"] = "apply"; out["var"] = a.var; break;
    case LocalAction::Kind::EnterChoice:
      out["kind"] = "choice";
      out["taken"] = a.took_then ? "then" : "else";
      return out;
  }
  if (a.payload) out["type"] = pretty(*a.payload);
  return out;
}

Json expansion_to_json(const std::string& protocol, int size,
                       const std::vector<std::vector<LocalAction>>& table) {
  Json ranks = Json::array();
  for (std::size_t r = 0; r < table.size(); ++r) {
    Json actions = Json::array();
    for (const auto& a : table[r]) actions.push_back(to_json(a));
    ranks.push_back(Json{{"rank", static_cast<int>(r)}, {"actions", actions}});
  }
  return Json{{"protocol", protocol}, {"size", size}, {"ranks", ranks}};
}

Json to_json(const Failure& f) {
  return Json{{"rank", f.rank},
              {"kind", to_string(f.kind)},
              {"span", to_json(f.span)},
              {"expected", f.expected},
              {"offered", f.offered},
              {"message", f.message}};
}

Json to_json(const ConformanceReport& r) {
  Json out;
  out["size"] = r.size;
  out["verdict"] = r.verdict == ConformVerdict::Pass       ? "pass"
                   : r.verdict == ConformVerdict::Excluded ? "excluded"
                                                           : "fail";
  out["failure"] = r.failure ? to_json(*r.failure) : Json(nullptr);
  Json log = Json::array();
  for (const auto& entry : r.collective_log) {
    Json item{{"step", entry.step}, {"kind", to_string(entry.kind)}};
    if (entry.root >= 0) item["root"] = entry.root;
    if (entry.kind == CommKind::Reduce || entry.kind == CommKind::Allreduce)
      item["op"] = to_string(entry.op);
    log.push_back(item);
  }
  out["collectives"] = log;
  return out;
}

Json to_json(const DeadlockReport& r) {
  Json cycle = Json::array();
  for (const auto& entry : r.wait_for_cycle)
    cycle.push_back(Json{{"rank", entry.rank}, {"pending", entry.pending}});
  Json ranks = Json::array();
  for (std::size_t i = 0; i < r.ranks.size(); ++i) {
    const auto& f = r.ranks[i];
    const char* status = f.status == RankStatus::Terminated ? "terminated"
                         : f.status == RankStatus::Blocked  ? "blocked"
                         : f.status == RankStatus::Faulted  ? "faulted"
                                                            : "running";
    Json item{{"rank", static_cast<int>(i)}, {"status", status}};
    if (!f.pending.empty()) item["pending"] = f.pending;
    if (!f.error.empty()) item["error"] = f.error;
    ranks.push_back(item);
  }
  return Json{{"deadlocked", r.deadlocked},
              {"budgetExhausted", r.budget_exhausted},
              {"stepsExecuted", r.steps_executed},
              {"waitForCycle", cycle},
              {"ranks", ranks}};
}

Json value_to_json(const Value& v) {
  if (v.is_int()) return Json(v.as_int());
  if (v.is_float()) return Json(v.as_float());
  Json out = Json::array();
  for (const auto& item : v.as_array()) out.push_back(value_to_json(item));
  return out;
}

BindingsSpec parse_bindings_spec(const std::string& text) {
  Json doc = Json::parse(text);  // throws nlohmann::json::parse_error
  if (!doc.is_object()) throw std::runtime_error("bindings document must be a JSON object");
  BindingsSpec spec;
  for (auto& [key, value] : doc.items()) {
    if (key == "size-defaults") {
      if (!value.is_object()) throw std::runtime_error("size-defaults must be an object");
      spec.size_defaults = value;
    } else if (key == "per-size") {
      if (!value.is_object()) throw std::runtime_error("per-size must be an object");
      for (auto& [size_key, overrides] : value.items()) {
        if (!overrides.is_object())
          throw std::runtime_error("per-size entry " + size_key + " must be an object");
        spec.per_size[std::stoi(size_key)] = overrides;
      }
    } else {
      throw std::runtime_error("unknown bindings key: " + key);
    }
  }
  return spec;
}

namespace {

const Datatype& strip_refinements(const Datatype& d) {
  return d.kind == Datatype::Kind::Refinement ? strip_refinements(*d.elem) : d;
}

Value json_to_value(const Json& j, const Datatype& declared, const std::string& name) {
  const Datatype& base = strip_refinements(declared);
  switch (base.kind) {
    case Datatype::Kind::Integer:
      if (!j.is_number_integer())
        throw PreconditionError("extern " + name + " must be an integer");
      return Value::of_int(j.get<std::int64_t>());
    case Datatype::Kind::Float:
      if (!j.is_number())
        throw PreconditionError("extern " + name + " must be a number");
      return Value::of_float(j.get<double>());
    case Datatype::Kind::Array: {
      if (!j.is_array()) throw PreconditionError("extern " + name + " must be an array");
      std::vector<Value> items;
      items.reserve(j.size());
      for (const auto& item : j) items.push_back(json_to_value(item, *base.elem, name));
      return Value::of_array(std::move(items));
    }
    default: throw PreconditionError("extern " + name + " has an unsupported datatype");
  }
}

}  // namespace

Bindings bindings_for_size(const BindingsSpec& spec, int size, const Program& prog) {
  Bindings b;
  b.size = size;
  for (const auto& ext : prog.externs) {
    const Json* slot = nullptr;
    auto per = spec.per_size.find(size);
    if (per != spec.per_size.end() && per->second.contains(ext.name))
      slot = &per->second.at(ext.name);
    else if (spec.size_defaults.contains(ext.name))
      slot = &spec.size_defaults.at(ext.name);
    if (!slot) throw PreconditionError("missing binding for extern " + ext.name);
    b.externs.emplace(ext.name, json_to_value(*slot, *ext.type, ext.name));
  }
  return b;
}

}  // namespace partypes
