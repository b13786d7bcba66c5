#include "partypes/conform.hpp"

#include <sstream>

#include "partypes/printer.hpp"
#include "partypes/project.hpp"

namespace partypes {

std::string CollectiveEntry::to_string() const {
  std::ostringstream os;
  os << "step " << step << ": " << partypes::to_string(kind);
  if (root >= 0) os << " root " << root;
  if (kind == CommKind::Reduce || kind == CommKind::Allreduce) os << " " << partypes::to_string(op);
  return os.str();
}

std::string ConformanceReport::to_string() const {
  std::ostringstream os;
  os << "size " << size << ": ";
  switch (verdict) {
    case ConformVerdict::Pass: os << "pass"; break;
    case ConformVerdict::Excluded: os << "excluded by precondition"; break;
    case ConformVerdict::Fail: {
      os << "fail";
      if (failure) {
        os << "\n  rank " << failure->rank << " at " << failure->span.to_string() << ": "
           << partypes::to_string(failure->kind);
        if (!failure->expected.empty()) os << ": expected " << failure->expected;
        if (!failure->offered.empty()) os << ", program offered " << failure->offered;
        if (!failure->message.empty()) os << " (" << failure->message << ")";
      }
      break;
    }
  }
  return os.str();
}

namespace {

LocalAction::Kind action_kind_for(CommKind kind) {
  switch (kind) {
    case CommKind::Send: return LocalAction::Kind::Send;
    case CommKind::Recv: return LocalAction::Kind::Recv;
    case CommKind::Broadcast: return LocalAction::Kind::Broadcast;
    case CommKind::Scatter: return LocalAction::Kind::Scatter;
    case CommKind::Gather: return LocalAction::Kind::Gather;
    case CommKind::Reduce: return LocalAction::Kind::Reduce;
    case CommKind::Allgather: return LocalAction::Kind::Allgather;
    case CommKind::Allreduce: return LocalAction::Kind::Allreduce;
    case CommKind::Apply: return LocalAction::Kind::Apply;
  }
  return LocalAction::Kind::Send;
}

class Driver {
 public:
  Driver(const GlobalProtocol& proto, const Bindings& b) : size_(b.size) {
    states_.reserve(static_cast<std::size_t>(b.size));
    for (int r = 0; r < b.size; ++r) states_.push_back(make_local_state(proto, b.size, r));
  }

  std::optional<Failure> on_suspend(int rank, const PendingOp& op) {
    LocalState& s = states_[static_cast<std::size_t>(rank)];

    if (op.kind == CommKind::Send) {
      if (op.peer < 0 || op.peer >= size_ || op.peer == rank)
        return fail(rank, op.span, FailureKind::RuntimeError, "", "",
                    "send to invalid rank " + std::to_string(op.peer));
    }
    if (op.kind == CommKind::Recv) {
      if (op.peer < 0 || op.peer >= size_ || op.peer == rank)
        return fail(rank, op.span, FailureKind::RuntimeError, "", "",
                    "recv from invalid rank " + std::to_string(op.peer));
    }

    Head head;
    if (auto failure = settle_choices(rank, op.span, head)) return failure;
    if (head.status == HeadStatus::AtSkip)
      return fail(rank, op.span, FailureKind::ProtocolMismatch, "protocol complete (skip)",
                  op.describe(), "");

    LocalAction offered;
    offered.kind = action_kind_for(op.kind);
    offered.peer = op.peer;
    offered.op = op.op;
    offered.var = head.action.var;  // program side has no protocol variable names
    offered.payload = nullptr;

    if (!same_action(head.action, offered))
      return fail(rank, op.span, FailureKind::ProtocolMismatch, to_string(head.action),
                  op.describe(), "");

    // Local value checks (sender, apply, contributions, root payloads).
    // Allgather/allreduce contributions are checked at commit, where the
    // collectively bound value is known.
    bool defer_to_commit =
        op.kind == CommKind::Allgather || op.kind == CommKind::Allreduce;
    if (op.value && !defer_to_commit) {
      const DatatypePtr& payload = head.action.payload;
      Env env = head.action.binds_value() ? s.env.extended(head.action.var, *op.value) : s.env;
      CheckResult r = check_value(*op.value, *payload, env);
      if (r.no())
        return fail(rank, op.span, FailureKind::RefinementViolation, pretty(*payload),
                    op.value->to_string(),
                    "value " + op.value->to_string() + " does not satisfy " + pretty(*payload));
      if (r.is_error())
        return fail(rank, op.span, FailureKind::RuntimeError, "", "",
                    "payload check failed to evaluate: " + r.detail());
      if (op.kind == CommKind::Scatter && op.peer == rank) {
        if (!op.value->is_array())
          return fail(rank, op.span, FailureKind::RefinementViolation, pretty(*payload),
                      op.value->to_string(), "scatter of a non-array value");
        std::size_t len = op.value->as_array().size();
        if (len % static_cast<std::size_t>(size_) != 0)
          return fail(rank, op.span, FailureKind::RefinementViolation, pretty(*payload),
                      op.value->to_string(),
                      "scatter length " + std::to_string(len) + " is not divisible by size " +
                          std::to_string(size_) + "; " + pretty(*payload) +
                          " requires exact chunking");
      }
    }
    return std::nullopt;
  }

  std::optional<Failure> on_commit(const CommitInfo& info) {
    if (info.kind == CommKind::Send) {
      // Sender side.
      if (auto failure = advance_rank(info.from, spans_[info.from],
                                      LocalAction{LocalAction::Kind::Send, info.to}, info.value))
        return failure;
      // Receiver side: delivered value is checked against the receiver's
      // payload copy.
      if (auto failure = advance_rank(info.to, spans_[info.to],
                                      LocalAction{LocalAction::Kind::Recv, info.from}, info.value))
        return failure;
      return std::nullopt;
    }

    if (info.kind == CommKind::Apply) {
      const Value* reference = nullptr;
      int reference_rank = -1;
      for (const auto& [rank, v] : info.contributions) {
        if (!reference) {
          reference = &v;
          reference_rank = rank;
          continue;
        }
        if (!(v == *reference))
          return fail(rank, spans_[rank], FailureKind::ValDisagreement,
                      "apply " + reference->to_string() + " (as offered by rank " +
                          std::to_string(reference_rank) + ")",
                      "apply " + v.to_string(), "val values must agree across ranks");
      }
      for (int r = 0; r < size_; ++r) {
        std::optional<Value> v = contribution_of(info, r);
        if (auto failure =
                advance_rank(r, spans_[r], LocalAction{LocalAction::Kind::Apply}, v))
          return failure;
      }
      return std::nullopt;
    }

    // Real collectives: advance every rank. The payload refinement applies
    // to the exchanged value; allgather/allreduce bind the collectively
    // identical concatenation or fold instead.
    for (int r = 0; r < size_; ++r) {
      LocalAction offered;
      offered.kind = action_kind_for(info.kind);
      offered.peer = info.root;
      offered.op = info.op;
      std::optional<Value> v, bound;
      switch (info.kind) {
        case CommKind::Broadcast:
          v = delivery_of(info, r);  // the root's value, bound everywhere
          break;
        case CommKind::Allgather:
        case CommKind::Allreduce:
          v = contribution_of(info, r);
          bound = delivery_of(info, r);
          break;
        case CommKind::Scatter:
          if (r == info.root) v = contribution_of(info, r);
          break;
        case CommKind::Gather:
        case CommKind::Reduce:
          v = contribution_of(info, r);  // per-rank contribution is checked
          break;
        default: break;
      }
      if (auto failure = advance_rank(r, spans_[r], offered, v, bound)) return failure;
    }
    CollectiveEntry entry;
    entry.step = info.step;
    entry.kind = info.kind;
    entry.root = info.root;
    entry.op = info.op;
    log_.push_back(entry);
    return std::nullopt;
  }

  std::optional<Failure> on_terminate(int rank) {
    Head head;
    if (auto failure = settle_choices(rank, {}, head)) return failure;
    if (head.status != HeadStatus::AtSkip)
      return fail(rank, {}, FailureKind::ResidualNotSkip, to_string(head.action),
                  "program terminated",
                  "the protocol still requires actions from this rank");
    return std::nullopt;
  }

  void note_span(int rank, const SourceSpan& span) { spans_[rank] = span; }

  const std::vector<CollectiveEntry>& log() const { return log_; }

 private:
  std::optional<Value> contribution_of(const CommitInfo& info, int rank) const {
    for (const auto& [r, v] : info.contributions)
      if (r == rank) return v;
    return std::nullopt;
  }

  std::optional<Value> delivery_of(const CommitInfo& info, int rank) const {
    for (const auto& [r, v] : info.deliveries)
      if (r == rank) return v;
    return std::nullopt;
  }

  // Choices are protocol-side only: consume them whenever they surface.
  std::optional<Failure> settle_choices(int rank, const SourceSpan& span, Head& head) {
    LocalState& s = states_[static_cast<std::size_t>(rank)];
    try {
      head = project_head(s);
      while (head.status == HeadStatus::Action &&
             head.action.kind == LocalAction::Kind::EnterChoice) {
        s = advance(s, head.action);
        head = project_head(s);
      }
    } catch (const EvalError& e) {
      return fail(rank, span, FailureKind::RuntimeError, "", "", e.what());
    }
    return std::nullopt;
  }

  std::optional<Failure> advance_rank(int rank, const SourceSpan& span, LocalAction offered,
                                      const std::optional<Value>& v,
                                      const std::optional<Value>& bound = std::nullopt) {
    LocalState& s = states_[static_cast<std::size_t>(rank)];
    Head head;
    if (auto failure = settle_choices(rank, span, head)) return failure;
    if (head.status == HeadStatus::AtSkip)
      return fail(rank, span, FailureKind::ProtocolMismatch, "protocol complete (skip)",
                  to_string(offered), "");
    offered.var = head.action.var;
    try {
      s = advance(s, offered, v, bound);
    } catch (const ProtocolMismatchError& e) {
      return fail(rank, span, FailureKind::ProtocolMismatch, e.expected, e.offered, "");
    } catch (const RefinementViolationError& e) {
      return fail(rank, span, FailureKind::RefinementViolation, e.refinement, e.value, e.what());
    } catch (const EvalError& e) {
      return fail(rank, span, FailureKind::RuntimeError, "", "", e.what());
    }
    return std::nullopt;
  }

  Failure fail(int rank, const SourceSpan& span, FailureKind kind, std::string expected,
               std::string offered, std::string message) {
    Failure f;
    f.rank = rank;
    f.span = span;
    f.kind = kind;
    f.expected = std::move(expected);
    f.offered = std::move(offered);
    f.message = std::move(message);
    return f;
  }

  int size_;
  std::vector<LocalState> states_;
  std::map<int, SourceSpan> spans_;
  std::vector<CollectiveEntry> log_;
};

void ensure_wellformed_at(const GlobalProtocol& proto, int size) {
  SizeVerdict verdict;
  WellformednessReport report = check_protocol(proto, SizeRange{size, size});
  verdict = report.per_size.front();
  if (verdict.status == SizeStatus::Excluded)
    throw PreconditionError("size " + std::to_string(size) +
                            " is excluded by the protocol precondition");
  if (verdict.status == SizeStatus::Error) {
    std::string text = "protocol " + proto.name + " is not well-formed at size " +
                       std::to_string(size);
    for (const auto& d : verdict.diagnostics) text += "\n  " + d.to_string();
    throw PreconditionError(text);
  }
}

void ensure_bindings(const Program& prog, const Bindings& b) {
  Env env = Env::with_size(b.size);
  for (const auto& ext : prog.externs) {
    auto it = b.externs.find(ext.name);
    if (it == b.externs.end())
      throw PreconditionError("missing binding for extern " + ext.name);
    CheckResult r = check_value(it->second, *ext.type, env);
    if (r.no())
      throw PreconditionError("binding for extern " + ext.name + " = " + it->second.to_string() +
                              " does not satisfy " + pretty(*ext.type));
    if (r.is_error())
      throw PreconditionError("binding check for extern " + ext.name +
                              " failed to evaluate: " + r.detail());
  }
}

}  // namespace

ConformanceReport check_conformance(const Program& prog, const GlobalProtocol& proto,
                                    const Bindings& b, const SchedulerOptions& opts) {
  ensure_wellformed_at(proto, b.size);
  ensure_bindings(prog, b);

  ConformanceReport report;
  report.size = b.size;

  Driver driver(proto, b);
  SchedulerCallbacks cb;
  cb.apply_rendezvous = true;
  cb.on_suspend = [&driver](int rank, const PendingOp& op) {
    driver.note_span(rank, op.span);
    return driver.on_suspend(rank, op);
  };
  cb.on_commit = [&driver](const CommitInfo& info) { return driver.on_commit(info); };
  cb.on_terminate = [&driver](int rank) { return driver.on_terminate(rank); };

  SchedOutcome outcome = run_scheduler(prog, b, opts, &cb);
  report.collective_log = driver.log();

  switch (outcome.status) {
    case RunStatus::Completed: {
      // Faulted ranks count as terminated for the scheduler but are
      // conformance failures.
      for (std::size_t r = 0; r < outcome.ranks.size(); ++r) {
        if (outcome.ranks[r].status == RankStatus::Faulted) {
          report.verdict = ConformVerdict::Fail;
          Failure f;
          f.rank = static_cast<int>(r);
          f.kind = FailureKind::RuntimeError;
          f.span = outcome.ranks[r].span;
          f.message = outcome.ranks[r].error;
          report.failure = f;
          return report;
        }
      }
      report.verdict = ConformVerdict::Pass;
      return report;
    }
    case RunStatus::Aborted:
      report.verdict = ConformVerdict::Fail;
      report.failure = outcome.failure;
      return report;
    case RunStatus::Deadlocked: {
      // Unreachable when every pending action matches its projection; kept
      // as an honest failure rather than an assert.
      report.verdict = ConformVerdict::Fail;
      Failure f;
      f.rank = outcome.cycle.empty() ? -1 : outcome.cycle.front().rank;
      f.kind = FailureKind::RuntimeError;
      f.message = "scheduler stalled although all pending actions match the protocol";
      report.failure = f;
      return report;
    }
    case RunStatus::BudgetExhausted: {
      report.verdict = ConformVerdict::Fail;
      Failure f;
      f.kind = FailureKind::RuntimeError;
      f.message = "step budget exhausted";
      report.failure = f;
      return report;
    }
  }
  return report;
}

std::vector<ConformanceReport> check_all_sizes(const Program& prog, const GlobalProtocol& proto,
                                               const std::function<Bindings(int)>& bindings_for,
                                               SizeRange r, const SchedulerOptions& opts) {
  std::vector<ConformanceReport> reports;
  for (int size = r.min; size <= r.max; ++size) {
    Env env = Env::with_size(size);
    bool admissible = eval_prop(*proto.size_prop, env);
    if (!admissible) {
      ConformanceReport excluded;
      excluded.size = size;
      excluded.verdict = ConformVerdict::Excluded;
      reports.push_back(std::move(excluded));
      continue;
    }
    Bindings b = bindings_for(size);
    b.size = size;
    reports.push_back(check_conformance(prog, proto, b, opts));
  }
  return reports;
}

}  // namespace partypes
