#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "partypes/program.hpp"
#include "partypes/value.hpp"

namespace partypes {

struct RuntimeFault {
  std::string message;
  SourceSpan span;
};

/// A communication the rank is suspended on. `value` is filled at suspension
/// time for senders, contributors and roots; receive-like results are bound
/// on resume.
struct PendingOp {
  CommKind kind = CommKind::Send;
  int peer = -1;  // send target / recv source / collective root
  ReduceOp op = ReduceOp::Sum;
  std::optional<Value> value;
  std::string bind;
  SourceSpan span;

  std::string describe() const;  // "send to 2", "broadcast root 0", ...
};

/// Mutable scope stack used by the interpreter; exposed for expression tests.
class RankScopes {
 public:
  void push();
  void pop();
  void declare(const std::string& name, Value v, bool mutable_slot, const SourceSpan& span);
  void assign(const std::string& name, Value v, const SourceSpan& span);
  const Value* lookup(const std::string& name) const;

 private:
  struct Slot {
    Value value;
    bool mutable_slot;
  };
  std::vector<std::map<std::string, Slot>> scopes_{1};
};

Value eval_expr(const Expr& e, const RankScopes& scopes);

enum class RankStatus { Running, Blocked, Terminated, Faulted };

/// Deterministic single-rank interpreter with explicit control stack so that
/// execution can suspend at communication statements and resume later.
class RankVM {
 public:
  RankVM(const Program& prog, int rank, int size, const std::map<std::string, Value>& externs);

  RankStatus status() const { return status_; }
  const PendingOp& pending() const { return pending_; }
  const RuntimeFault& fault() const { return fault_; }
  int rank() const { return rank_; }

  /// Runs statements until the rank suspends, terminates, faults, or the
  /// shared budget is exhausted. Decrements `budget` once per executed
  /// statement.
  void run_slice(std::int64_t& budget);

  /// Completes the pending operation, binding `delivered` when the pending
  /// op names a result variable.
  void resume(const std::optional<Value>& delivered);

  /// Faults a blocked rank from the outside (structurally impossible
  /// collective, e.g. scatter with a non-divisible length).
  void poison(const std::string& message);

  const Value* lookup(const std::string& name) const { return scopes_.lookup(name); }

 private:
  struct Frame {
    enum class Kind { Block, Loop } kind;
    const std::vector<StmtPtr>* stmts = nullptr;
    std::size_t next = 0;
    bool scoped = false;
    // Loop state
    std::string var;
    std::int64_t current = 0, last = -1;
  };

  void exec(const Stmt& stmt);
  bool step();  // one statement or frame transition; false when done

  const Program& prog_;
  int rank_, size_;
  RankScopes scopes_;
  std::vector<Frame> stack_;
  RankStatus status_ = RankStatus::Running;
  PendingOp pending_;
  RuntimeFault fault_;
};

}  // namespace partypes
