#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "partypes/conform.hpp"
#include "partypes/json_io.hpp"
#include "partypes/parser.hpp"
#include "partypes/printer.hpp"
#include "partypes/project.hpp"
#include "partypes/simulate.hpp"
#include "partypes/wellformed.hpp"

namespace py = pybind11;
using namespace partypes;

namespace {

py::object json_to_py(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return py::none();
    case Json::value_t::boolean: return py::bool_(j.get<bool>());
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned: return py::int_(j.get<std::int64_t>());
    case Json::value_t::number_float: return py::float_(j.get<double>());
    case Json::value_t::string: return py::str(j.get<std::string>());
    case Json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case Json::value_t::object: {
      py::dict out;
      for (auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
      return out;
    }
    default: return py::none();
  }
}

Json py_to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<std::int64_t>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    Json out = Json::array();
    for (const auto& item : obj) out.push_back(py_to_json(item));
    return out;
  }
  if (py::isinstance<py::dict>(obj)) {
    Json out = Json::object();
    for (const auto& item : obj.cast<py::dict>())
      out[item.first.cast<std::string>()] = py_to_json(item.second);
    return out;
  }
  throw py::type_error("cannot convert value to JSON: " +
                       py::repr(obj).cast<std::string>());
}

struct PyProtocol {
  GlobalProtocol proto;
};

struct PyProgram {
  Program prog;
};

PyProtocol parse_protocol_py(const std::string& text, const std::string& filename) {
  auto r = parse_protocol(text, filename);
  if (!r.ok()) throw py::value_error(render_diagnostics(r.diagnostics));
  return PyProtocol{*r.result};
}

PyProgram parse_program_py(const std::string& text, const std::string& filename) {
  auto r = parse_program(text, filename);
  if (!r.ok()) throw py::value_error(render_diagnostics(r.diagnostics));
  return PyProgram{*r.result};
}

// Accepts either a full spec ({"size-defaults": ..., "per-size": ...}) or a
// flat {extern: value} mapping.
BindingsSpec spec_from_py(const py::dict& bindings) {
  Json doc = py_to_json(bindings);
  if (!doc.contains("size-defaults") && !doc.contains("per-size"))
    doc = Json{{"size-defaults", doc}};
  return parse_bindings_spec(doc.dump());
}

py::object check_protocol_py(const PyProtocol& p, int min_size, int max_size) {
  return json_to_py(to_json(check_protocol(p.proto, SizeRange{min_size, max_size})));
}

py::object infer_min_size_py(const PyProtocol& p, int min_size, int max_size) {
  auto result = infer_min_size(p.proto, SizeRange{min_size, max_size});
  if (!result) return py::none();
  return py::int_(*result);
}

py::object project_py(const PyProtocol& p, int size) {
  return json_to_py(expansion_to_json(p.proto.name, size, expansion_table(p.proto, size)));
}

std::vector<std::vector<std::string>> action_table_py(const PyProtocol& p, int size) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : expansion_table(p.proto, size)) {
    std::vector<std::string> line;
    line.reserve(row.size());
    for (const auto& a : row) line.push_back(to_string(a));
    out.push_back(std::move(line));
  }
  return out;
}

py::object check_conformance_py(const PyProgram& prog, const PyProtocol& proto, int size,
                                const py::dict& bindings, std::int64_t max_steps) {
  SchedulerOptions opts;
  opts.max_steps = max_steps;
  Bindings b = bindings_for_size(spec_from_py(bindings), size, prog.prog);
  return json_to_py(to_json(check_conformance(prog.prog, proto.proto, b, opts)));
}

py::object check_all_sizes_py(const PyProgram& prog, const PyProtocol& proto,
                              const py::dict& bindings, int min_size, int max_size,
                              std::int64_t max_steps) {
  SchedulerOptions opts;
  opts.max_steps = max_steps;
  BindingsSpec spec = spec_from_py(bindings);
  auto reports = check_all_sizes(
      prog.prog, proto.proto, [&](int s) { return bindings_for_size(spec, s, prog.prog); },
      SizeRange{min_size, max_size}, opts);
  Json out = Json::array();
  for (const auto& r : reports) out.push_back(to_json(r));
  return json_to_py(out);
}

py::object simulate_py(const PyProgram& prog, int size, const py::dict& bindings,
                       std::int64_t max_steps, bool collect_trace) {
  SchedulerOptions opts;
  opts.max_steps = max_steps;
  Bindings b = bindings_for_size(spec_from_py(bindings), size, prog.prog);
  std::vector<std::string> trace;
  std::function<void(const CommitInfo&)> observer;
  if (collect_trace)
    observer = [&trace](const CommitInfo& info) { trace.push_back(info.trace_line()); };
  DeadlockReport report = run(prog.prog, b, opts, observer);
  Json doc = to_json(report);
  if (collect_trace) doc["trace"] = trace;
  return json_to_py(doc);
}

PyProgram synthesize_py(const PyProtocol& proto, int size) {
  return PyProgram{synthesize(proto.proto, size)};
}

}  // namespace

PYBIND11_MODULE(_partypes, m) {
  m.doc() = "Protocol checking, projection, conformance and synchronous simulation for "
            "MPI-style programs";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<EvalError>(m, "EvalError", PyExc_RuntimeError);

  py::class_<PyProtocol>(m, "Protocol")
      .def_property_readonly("name", [](const PyProtocol& p) { return p.proto.name; })
      .def("__str__", [](const PyProtocol& p) { return pretty_protocol(p.proto); })
      .def("__repr__",
           [](const PyProtocol& p) { return "<Protocol " + p.proto.name + ">"; });

  py::class_<PyProgram>(m, "Program")
      .def_property_readonly("externs",
                             [](const PyProgram& p) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& e : p.prog.externs)
                                 out.push_back({e.name, pretty(*e.type)});
                               return out;
                             })
      .def("__str__", [](const PyProgram& p) { return pretty_program(p.prog); })
      .def("__repr__", [](const PyProgram& p) {
        return "<Program with " + std::to_string(p.prog.body.size()) + " statements>";
      });

  m.def("parse_protocol", &parse_protocol_py, py::arg("text"),
        py::arg("filename") = "<string>",
        "Parse a protocol source; raises ValueError with diagnostics on failure.");
  m.def("parse_program", &parse_program_py, py::arg("text"), py::arg("filename") = "<string>",
        "Parse an SPMD program source; raises ValueError with diagnostics on failure.");
  m.def("check_protocol", &check_protocol_py, py::arg("protocol"), py::arg("min_size") = 1,
        py::arg("max_size") = 16,
        "Bounded well-formedness report over a size range, as a dict.");
  m.def("infer_min_size", &infer_min_size_py, py::arg("protocol"), py::arg("min_size") = 1,
        py::arg("max_size") = 16,
        "Smallest size from which every checked size passes, or None.");
  m.def("project", &project_py, py::arg("protocol"), py::arg("size"),
        "Per-rank action table as a dict (same shape as the CLI JSON).");
  m.def("action_table", &action_table_py, py::arg("protocol"), py::arg("size"),
        "Per-rank action table as lists of action strings.");
  m.def("check_conformance", &check_conformance_py, py::arg("program"), py::arg("protocol"),
        py::arg("size"), py::arg("bindings") = py::dict(),
        py::arg("max_steps") = kDefaultStepBudget,
        "Lockstep conformance verdict at one size, as a dict.");
  m.def("check_all_sizes", &check_all_sizes_py, py::arg("program"), py::arg("protocol"),
        py::arg("bindings") = py::dict(), py::arg("min_size") = 1, py::arg("max_size") = 16,
        py::arg("max_steps") = kDefaultStepBudget,
        "One conformance report per size, ascending.");
  m.def("simulate", &simulate_py, py::arg("program"), py::arg("size"),
        py::arg("bindings") = py::dict(), py::arg("max_steps") = kDefaultStepBudget,
        py::arg("collect_trace") = false,
        "Synchronous run; returns the deadlock report as a dict.");
  m.def("synthesize", &synthesize_py, py::arg("protocol"), py::arg("size"),
        "Canonical program performing exactly the projected actions.");
}
