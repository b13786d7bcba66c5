#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/eval.hpp"
#include "partypes/interp.hpp"
#include "partypes/program.hpp"

namespace partypes {

struct Bindings {
  int size = 1;
  std::map<std::string, Value> externs;
};

constexpr std::int64_t kDefaultStepBudget = 10'000'000;

struct SchedulerOptions {
  std::int64_t max_steps = kDefaultStepBudget;
  // Deterministic minimum-rank matching by default; a seeded random policy
  // exists to test confluence of the rendezvous relation.
  bool random_policy = false;
  std::uint64_t seed = 0;
};

/// Conformance failure kinds; also reused for faults surfaced by the
/// scheduler itself.
enum class FailureKind { ProtocolMismatch, RefinementViolation, ValDisagreement, ResidualNotSkip, RuntimeError };

const char* to_string(FailureKind kind);

struct Failure {
  int rank = -1;
  SourceSpan span;
  FailureKind kind = FailureKind::RuntimeError;
  std::string expected, offered, message;
};

/// A committed rendezvous, as seen by observers.
struct CommitInfo {
  std::int64_t step = 0;  // 1-based commit index
  CommKind kind = CommKind::Send;
  int from = -1, to = -1;           // point-to-point endpoints
  int root = -1;                    // collectives
  ReduceOp op = ReduceOp::Sum;
  std::optional<Value> value;       // p2p payload / broadcast value
  std::vector<std::pair<int, Value>> deliveries;  // per-rank bound results
  std::vector<std::pair<int, Value>> contributions;  // per-rank offered values

  std::string trace_line() const;
};

struct SchedulerCallbacks {
  std::function<std::optional<Failure>(int rank, const PendingOp&)> on_suspend;
  std::function<std::optional<Failure>(const CommitInfo&)> on_commit;
  std::function<std::optional<Failure>(int rank)> on_terminate;
  std::function<void(const CommitInfo&)> trace;
  // When false, `apply` completes locally without synchronizing.
  bool apply_rendezvous = false;
};

enum class RunStatus { Completed, Deadlocked, BudgetExhausted, Aborted };

struct CycleEntry {
  int rank = -1;
  std::string pending;
};

struct RankFinal {
  RankStatus status = RankStatus::Terminated;
  std::string pending;  // description when blocked
  std::string error;    // fault message
  SourceSpan span;
};

struct SchedOutcome {
  RunStatus status = RunStatus::Completed;
  std::int64_t commits = 0;
  std::vector<CycleEntry> cycle;  // wait-for cycle, or all blocked ranks when
                                  // the stall involves an unmatched collective
  std::optional<Failure> failure;
  std::vector<RankFinal> ranks;
};

SchedOutcome run_scheduler(const Program& prog, const Bindings& b, const SchedulerOptions& opts,
                           const SchedulerCallbacks* callbacks);

/// Report of a plain (protocol-free) synchronous run.
struct DeadlockReport {
  bool deadlocked = false;
  bool budget_exhausted = false;
  std::vector<CycleEntry> wait_for_cycle;
  std::int64_t steps_executed = 0;  // committed rendezvous
  std::vector<RankFinal> ranks;

  bool any_fault() const;
};

/// Executes all ranks under synchronous (unbuffered) semantics. `apply` is an
/// annotation and completes locally. Deterministic: among enabled rendezvous
/// the one whose smallest participating rank is least commits first.
DeadlockReport run(const Program& prog, const Bindings& b,
                   const SchedulerOptions& opts = SchedulerOptions(),
                   const std::function<void(const CommitInfo&)>& trace = nullptr);

/// Canonical program: each rank performs exactly its projected action
/// sequence with witness values. Passes conformance by construction.
Program synthesize(const GlobalProtocol& proto, int size, const Env& env = Env());

/// Per-rank statement lists behind `synthesize`, exposed so tests can mutate
/// them before assembly.
std::vector<std::vector<StmtPtr>> synthesize_per_rank(const GlobalProtocol& proto, int size,
                                                      const Env& env = Env());
Program assemble_spmd(const std::vector<std::vector<StmtPtr>>& per_rank);

}  // namespace partypes
