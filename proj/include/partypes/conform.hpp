#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/program.hpp"
#include "partypes/simulate.hpp"
#include "partypes/wellformed.hpp"

namespace partypes {

/// Raised when inputs violate a checker precondition (ill-formed protocol at
/// the requested size, missing or ill-typed extern bindings). Distinct from a
/// fail verdict: these are tool-usage errors.
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

struct CollectiveEntry {
  std::int64_t step = 0;
  CommKind kind = CommKind::Broadcast;
  int root = -1;  // -1 for rootless collectives
  ReduceOp op = ReduceOp::Sum;

  std::string to_string() const;
};

enum class ConformVerdict { Pass, Fail, Excluded };

struct ConformanceReport {
  int size = 0;
  ConformVerdict verdict = ConformVerdict::Pass;
  std::optional<Failure> failure;
  std::vector<CollectiveEntry> collective_log;

  bool pass() const { return verdict == ConformVerdict::Pass; }
  std::string to_string() const;
};

/// Lockstep interpretation of the program against the protocol at one size.
/// Every rank runs under the synchronous scheduler; each communication is
/// matched against that rank's projected protocol head, values are checked
/// against payload refinements, `apply` values must agree across ranks, and
/// every rank must end with a skip-equivalent residual.
ConformanceReport check_conformance(const Program& prog, const GlobalProtocol& proto,
                                    const Bindings& b,
                                    const SchedulerOptions& opts = SchedulerOptions());

/// One report per size in the range, ascending; sizes rejected by the header
/// proposition are marked Excluded.
std::vector<ConformanceReport> check_all_sizes(
    const Program& prog, const GlobalProtocol& proto,
    const std::function<Bindings(int)>& bindings_for, SizeRange r,
    const SchedulerOptions& opts = SchedulerOptions());

}  // namespace partypes
