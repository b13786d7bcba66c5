#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "partypes/conform.hpp"
#include "partypes/json_io.hpp"
#include "partypes/parser.hpp"
#include "partypes/printer.hpp"
#include "partypes/project.hpp"
#include "partypes/simulate.hpp"
#include "partypes/wellformed.hpp"

namespace {

using namespace partypes;

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct SizesOption {
  int min = 1;
  int max = 16;
};

bool parse_sizes(const std::string& text, SizesOption& out) {
  auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      out.min = out.max = std::stoi(text);
    } else {
      out.min = std::stoi(text.substr(0, dots));
      out.max = std::stoi(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    return false;
  }
  return out.min >= 1 && out.min <= out.max;
}

std::int64_t step_budget() {
  if (const char* env = std::getenv("PARTYPES_MAX_STEPS")) {
    try {
      return std::stoll(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring unparsable PARTYPES_MAX_STEPS\n";
    }
  }
  return kDefaultStepBudget;
}

std::optional<GlobalProtocol> load_protocol(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  auto result = parse_protocol(*text, path);
  if (!result.ok()) {
    std::cerr << render_diagnostics(result.diagnostics);
    return std::nullopt;
  }
  return *result.result;
}

std::optional<Program> load_program(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  auto result = parse_program(*text, path);
  if (!result.ok()) {
    std::cerr << render_diagnostics(result.diagnostics);
    return std::nullopt;
  }
  return *result.result;
}

std::optional<BindingsSpec> load_bindings(const std::string& path) {
  if (path.empty()) return BindingsSpec{};
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return std::nullopt;
  }
  try {
    return parse_bindings_spec(*text);
  } catch (const std::exception& e) {
    std::cerr << "error: malformed bindings file " << path << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

int cmd_check(const std::string& file, const SizesOption& sizes, bool json) {
  auto proto = load_protocol(file);
  if (!proto) return kUsage;
  WellformednessReport report = check_protocol(*proto, SizeRange{sizes.min, sizes.max});
  if (json) {
    std::cout << to_json(report).dump(2) << "\n";
  } else {
    std::cout << "protocol " << report.protocol << ": checked sizes " << sizes.min << ".."
              << sizes.max << "\n";
    for (const auto& v : report.per_size) {
      std::cout << "size " << v.size << ": ";
      switch (v.status) {
        case SizeStatus::Ok: std::cout << "ok\n"; break;
        case SizeStatus::Excluded: std::cout << "excluded by precondition\n"; break;
        case SizeStatus::Error:
          std::cout << v.diagnostics.size()
                    << (v.diagnostics.size() == 1 ? " error\n" : " errors\n");
          for (const auto& d : v.diagnostics) std::cout << "  " << d.to_string() << "\n";
          break;
      }
    }
    if (report.inferred_min_size)
      std::cout << "inferred minimum size: " << *report.inferred_min_size << "\n";
    else
      std::cout << "inferred minimum size: none in range\n";
  }
  return report.all_ok() ? kOk : kFindings;
}

int cmd_project(const std::string& file, int size, std::optional<int> rank, bool json) {
  auto proto = load_protocol(file);
  if (!proto) return kUsage;
  if (size < 1) {
    std::cerr << "error: --size must be at least 1\n";
    return kUsage;
  }
  bool admissible = false;
  try {
    admissible = eval_prop(*proto->size_prop, Env::with_size(size));
  } catch (const EvalError& e) {
    std::cerr << "error: size proposition failed to evaluate: " << e.what() << "\n";
    return kUsage;
  }
  if (!admissible) {
    std::cerr << "error: size " << size << " is excluded by the protocol precondition ("
              << pretty(*proto->size_prop) << ")\n";
    return kUsage;
  }
  if (rank && (*rank < 0 || *rank >= size)) {
    std::cerr << "error: --rank must lie in 0.." << size - 1 << "\n";
    return kUsage;
  }
  std::vector<std::vector<LocalAction>> table;
  try {
    table = expansion_table(*proto, size);
  } catch (const EvalError& e) {
    std::cerr << "error: projection failed: " << e.what() << "\n";
    return kUsage;
  }
  if (json) {
    if (rank) {
      std::vector<std::vector<LocalAction>> one{table[static_cast<std::size_t>(*rank)]};
      Json doc = expansion_to_json(proto->name, size, one);
      doc["ranks"][0]["rank"] = *rank;
      std::cout << doc.dump(2) << "\n";
    } else {
      std::cout << expansion_to_json(proto->name, size, table).dump(2) << "\n";
    }
  } else {
    std::cout << "protocol " << proto->name << " at size " << size << "\n";
    for (std::size_t r = 0; r < table.size(); ++r) {
      if (rank && static_cast<int>(r) != *rank) continue;
      std::cout << "rank " << r << ":\n";
      for (const auto& action : table[r]) std::cout << "  " << to_string(action) << "\n";
    }
  }
  return kOk;
}

int cmd_verify(const std::string& prog_file, const std::string& proto_file,
               const SizesOption& sizes, const std::string& bindings_file, bool json) {
  auto prog = load_program(prog_file);
  if (!prog) return kUsage;
  auto proto = load_protocol(proto_file);
  if (!proto) return kUsage;
  auto spec = load_bindings(bindings_file);
  if (!spec) return kUsage;

  SchedulerOptions opts;
  opts.max_steps = step_budget();
  std::vector<ConformanceReport> reports;
  try {
    reports = check_all_sizes(
        *prog, *proto, [&](int size) { return bindings_for_size(*spec, size, *prog); },
        SizeRange{sizes.min, sizes.max}, opts);
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  bool any_fail = false;
  for (const auto& r : reports) any_fail = any_fail || r.verdict == ConformVerdict::Fail;
  if (json) {
    Json out = Json::array();
    for (const auto& r : reports) out.push_back(to_json(r));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "program " << prog_file << " against protocol " << proto->name << "\n";
    for (const auto& r : reports) std::cout << r.to_string() << "\n";
  }
  return any_fail ? kFindings : kOk;
}

int cmd_simulate(const std::string& prog_file, int size, const std::string& bindings_file,
                 bool trace, bool json) {
  auto prog = load_program(prog_file);
  if (!prog) return kUsage;
  if (size < 1) {
    std::cerr << "error: --size must be at least 1\n";
    return kUsage;
  }
  auto spec = load_bindings(bindings_file);
  if (!spec) return kUsage;
  Bindings b;
  try {
    b = bindings_for_size(*spec, size, *prog);
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  SchedulerOptions opts;
  opts.max_steps = step_budget();
  std::function<void(const CommitInfo&)> observer;
  if (trace) observer = [](const CommitInfo& info) { std::cout << info.trace_line() << "\n"; };
  DeadlockReport report = run(*prog, b, opts, observer);

  if (json) {
    std::cout << to_json(report).dump(2) << "\n";
  } else {
    if (report.budget_exhausted) {
      std::cout << "budget exhausted after " << report.steps_executed << " steps\n";
    } else if (report.deadlocked) {
      std::cout << "DEADLOCK after " << report.steps_executed << " steps\n";
      std::cout << "wait-for cycle:\n";
      for (const auto& entry : report.wait_for_cycle)
        std::cout << "  rank " << entry.rank << ": " << entry.pending << "\n";
    } else {
      std::cout << "no deadlock: all ranks terminated (" << report.steps_executed
                << " steps)\n";
    }
    for (std::size_t r = 0; r < report.ranks.size(); ++r)
      if (report.ranks[r].status == RankStatus::Faulted)
        std::cout << "rank " << r << " faulted at " << report.ranks[r].span.to_string() << ": "
                  << report.ranks[r].error << "\n";
  }
  if (report.budget_exhausted) return kUsage;
  return (report.deadlocked || report.any_fault()) ? kFindings : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partypes: protocol checking, projection, conformance and simulation for "
               "MPI-style programs"};
  app.require_subcommand(1);

  std::string sizes_text = "1..16";
  std::string format = "text";
  std::string file, prog_file, proto_file, bindings_file;
  int size = 0;
  int rank = -1;
  bool trace = false;

  auto add_format = [&format](CLI::App* cmd) {
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  };

  CLI::App* check = app.add_subcommand("check", "Check protocol well-formedness over a size range");
  check->add_option("file", file, "Protocol file (.pt)")->required();
  check->add_option("--sizes", sizes_text, "Size range A..B (default 1..16)");
  add_format(check);

  CLI::App* project = app.add_subcommand("project", "Print per-rank action tables");
  project->add_option("file", file, "Protocol file (.pt)")->required();
  project->add_option("--size", size, "Number of processes")->required();
  project->add_option("--rank", rank, "Restrict output to one rank");
  add_format(project);

  CLI::App* verify = app.add_subcommand("verify", "Check a program against a protocol");
  verify->add_option("program", prog_file, "Program file (.mpp)")->required();
  verify->add_option("--protocol", proto_file, "Protocol file (.pt)")->required();
  verify->add_option("--sizes", sizes_text, "Size range A..B (default 1..16)");
  verify->add_option("--bindings", bindings_file, "Extern bindings JSON file");
  add_format(verify);

  CLI::App* simulate = app.add_subcommand("simulate", "Run a program under synchronous semantics");
  simulate->add_option("program", prog_file, "Program file (.mpp)")->required();
  simulate->add_option("--size", size, "Number of processes")->required();
  simulate->add_option("--bindings", bindings_file, "Extern bindings JSON file");
  simulate->add_flag("--trace", trace, "Print one line per committed rendezvous");
  add_format(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream devnull;
    int code = app.exit(e, devnull, devnull);
    if (code != 0) {
      std::cerr << devnull.str();
      return kUsage;
    }
    std::cout << devnull.str();  // --help
    return kOk;
  }

  SizesOption sizes;
  if (!parse_sizes(sizes_text, sizes)) {
    std::cerr << "error: --sizes must look like A..B with 1 <= A <= B\n";
    return kUsage;
  }
  bool json = format == "json";

  if (check->parsed()) return cmd_check(file, sizes, json);
  if (project->parsed())
    return cmd_project(file, size, rank >= 0 ? std::optional<int>(rank) : std::nullopt, json);
  if (verify->parsed()) return cmd_verify(prog_file, proto_file, sizes, bindings_file, json);
  if (simulate->parsed()) return cmd_simulate(prog_file, size, bindings_file, trace, json);
  return kUsage;
}
