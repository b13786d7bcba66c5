#include "partypes/simulate.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "partypes/project.hpp"

namespace partypes {

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::ProtocolMismatch: return "protocol mismatch";
    case FailureKind::RefinementViolation: return "refinement violation";
    case FailureKind::ValDisagreement: return "val disagreement";
    case FailureKind::ResidualNotSkip: return "residual not skip";
    case FailureKind::RuntimeError: return "runtime error";
  }
  return "?";
}

std::string CommitInfo::trace_line() const {
  std::ostringstream os;
  os << "step " << step << ": ";
  if (kind == CommKind::Send) {
    os << from << " -> " << to << " : " << (value ? value->to_string() : "?");
  } else {
    os << "collective " << to_string(kind);
    if (root >= 0) os << " root " << root;
    if (kind == CommKind::Reduce || kind == CommKind::Allreduce) os << " " << to_string(op);
  }
  return os.str();
}

bool DeadlockReport::any_fault() const {
  return std::any_of(ranks.begin(), ranks.end(),
                     [](const RankFinal& r) { return r.status == RankStatus::Faulted; });
}

namespace {

// scheduler-internal signal for structurally impossible collectives
struct FoldError {
  std::string message;
};

class Scheduler {
 public:
  Scheduler(const Program& prog, const Bindings& b, const SchedulerOptions& opts,
            const SchedulerCallbacks* cb)
      : opts_(opts), cb_(cb), rng_(opts.seed) {
    vms_.reserve(static_cast<std::size_t>(b.size));
    for (int r = 0; r < b.size; ++r) vms_.emplace_back(prog, r, b.size, b.externs);
    size_ = b.size;
  }

  SchedOutcome run() {
    budget_ = opts_.max_steps;
    while (true) {
      if (!run_phase()) return finish(out_.status);
      if (budget_ <= 0 && any_running()) return finish(RunStatus::BudgetExhausted);

      std::vector<Rendezvous> enabled = enabled_rendezvous();
      if (enabled.empty()) {
        if (all_settled()) return finish(RunStatus::Completed);
        return deadlock();
      }
      std::size_t pick = 0;
      if (opts_.random_policy) {
        pick = std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng_);
      }
      if (!commit(enabled[pick])) return finish(out_.status);
    }
  }

 private:
  struct Rendezvous {
    bool p2p = false;
    int sender = -1, receiver = -1;
    CommKind kind = CommKind::Send;  // collective kind when !p2p
    int min_rank = 0;
  };

  bool any_running() const {
    return std::any_of(vms_.begin(), vms_.end(),
                       [](const RankVM& vm) { return vm.status() == RankStatus::Running; });
  }

  bool all_settled() const {
    return std::all_of(vms_.begin(), vms_.end(), [](const RankVM& vm) {
      return vm.status() == RankStatus::Terminated || vm.status() == RankStatus::Faulted;
    });
  }

  // Runs every runnable rank to quiescence. Returns false to abort.
  bool run_phase() {
    bool again = true;
    while (again) {
      again = false;
      for (auto& vm : vms_) {
        if (vm.status() != RankStatus::Running) continue;
        vm.run_slice(budget_);
        if (budget_ <= 0 && vm.status() == RankStatus::Running) return true;
        if (vm.status() == RankStatus::Blocked) {
          if (cb_ && cb_->on_suspend) {
            if (auto failure = cb_->on_suspend(vm.rank(), vm.pending())) {
              out_.failure = failure;
              out_.status = RunStatus::Aborted;
              return false;
            }
          }
          if (vm.pending().kind == CommKind::Apply && !(cb_ && cb_->apply_rendezvous)) {
            vm.resume(std::nullopt);  // annotation only: completes locally
            again = true;
          }
        } else if (vm.status() == RankStatus::Terminated && cb_ && cb_->on_terminate) {
          if (auto failure = cb_->on_terminate(vm.rank())) {
            out_.failure = failure;
            out_.status = RunStatus::Aborted;
            return false;
          }
        }
      }
    }
    return true;
  }

  std::vector<Rendezvous> enabled_rendezvous() const {
    std::vector<Rendezvous> out;
    // point-to-point pairs
    for (int s = 0; s < size_; ++s) {
      const RankVM& sender = vms_[static_cast<std::size_t>(s)];
      if (sender.status() != RankStatus::Blocked || sender.pending().kind != CommKind::Send)
        continue;
      int t = sender.pending().peer;
      if (t < 0 || t >= size_ || t == s) continue;
      const RankVM& receiver = vms_[static_cast<std::size_t>(t)];
      if (receiver.status() != RankStatus::Blocked || receiver.pending().kind != CommKind::Recv)
        continue;
      if (receiver.pending().peer != s) continue;
      out.push_back(Rendezvous{true, s, t, CommKind::Send, std::min(s, t)});
    }
    // collectives: all ranks pending on the same kind with equal root and op
    if (size_ > 0) {
      const RankVM& first = vms_[0];
      if (first.status() == RankStatus::Blocked) {
        CommKind kind = first.pending().kind;
        bool collective = kind == CommKind::Broadcast || kind == CommKind::Scatter ||
                          kind == CommKind::Gather || kind == CommKind::Reduce ||
                          kind == CommKind::Allgather || kind == CommKind::Allreduce ||
                          (kind == CommKind::Apply && cb_ && cb_->apply_rendezvous);
        if (collective) {
          bool all = true;
          for (int r = 1; r < size_ && all; ++r) {
            const RankVM& vm = vms_[static_cast<std::size_t>(r)];
            all = vm.status() == RankStatus::Blocked && vm.pending().kind == kind &&
                  vm.pending().peer == first.pending().peer &&
                  vm.pending().op == first.pending().op;
          }
          if (all) out.push_back(Rendezvous{false, -1, -1, kind, 0});
        }
      }
    }
    std::sort(out.begin(), out.end(),
              [](const Rendezvous& a, const Rendezvous& b) { return a.min_rank < b.min_rank; });
    return out;
  }

  bool commit(const Rendezvous& rv) {
    CommitInfo info;
    info.step = out_.commits + 1;

    if (rv.p2p) {
      RankVM& sender = vms_[static_cast<std::size_t>(rv.sender)];
      RankVM& receiver = vms_[static_cast<std::size_t>(rv.receiver)];
      info.kind = CommKind::Send;
      info.from = rv.sender;
      info.to = rv.receiver;
      info.value = sender.pending().value;
      info.deliveries.push_back({rv.receiver, *info.value});
      if (cb_ && cb_->on_commit) {
        if (auto failure = cb_->on_commit(info)) {
          out_.failure = failure;
          out_.status = RunStatus::Aborted;
          return false;
        }
      }
      ++out_.commits;
      if (cb_ && cb_->trace) cb_->trace(info);
      sender.resume(std::nullopt);
      receiver.resume(info.value);
      return true;
    }

    info.kind = rv.kind;
    info.root = vms_[0].pending().peer;
    info.op = vms_[0].pending().op;
    for (int r = 0; r < size_; ++r) {
      const auto& pending = vms_[static_cast<std::size_t>(r)].pending();
      if (pending.value) info.contributions.push_back({r, *pending.value});
    }

    std::vector<std::optional<Value>> results(static_cast<std::size_t>(size_));
    try {
      compute_deliveries(rv.kind, info, results);
    } catch (const FoldError& e) {
      collective_fault(e.message);
      return true;  // all participants faulted; scheduler continues to wind down
    }

    for (int r = 0; r < size_; ++r)
      if (results[static_cast<std::size_t>(r)])
        info.deliveries.push_back({r, *results[static_cast<std::size_t>(r)]});

    if (cb_ && cb_->on_commit) {
      if (auto failure = cb_->on_commit(info)) {
        out_.failure = failure;
        out_.status = RunStatus::Aborted;
        return false;
      }
    }
    ++out_.commits;
    if (cb_ && cb_->trace) cb_->trace(info);
    for (int r = 0; r < size_; ++r)
      vms_[static_cast<std::size_t>(r)].resume(results[static_cast<std::size_t>(r)]);
    return true;
  }

  void compute_deliveries(CommKind kind, const CommitInfo& info,
                          std::vector<std::optional<Value>>& results) {
    switch (kind) {
      case CommKind::Apply: return;  // agreement is the driver's business
      case CommKind::Broadcast: {
        const Value* root_value = contribution_of(info, info.root);
        if (!root_value) throw FoldError{"broadcast root supplied no value"};
        for (int r = 0; r < size_; ++r) results[static_cast<std::size_t>(r)] = *root_value;
        return;
      }
      case CommKind::Scatter: {
        const Value* root_value = contribution_of(info, info.root);
        if (!root_value) throw FoldError{"scatter root supplied no value"};
        if (!root_value->is_array()) throw FoldError{"scatter of a non-array"};
        const auto& items = root_value->as_array();
        if (items.size() % static_cast<std::size_t>(size_) != 0)
          throw FoldError{"scatter length " + std::to_string(items.size()) +
                          " is not divisible by size " + std::to_string(size_)};
        std::size_t chunk = items.size() / static_cast<std::size_t>(size_);
        for (int r = 0; r < size_; ++r) {
          std::vector<Value> part(items.begin() + static_cast<std::ptrdiff_t>(chunk * r),
                                  items.begin() + static_cast<std::ptrdiff_t>(chunk * (r + 1)));
          results[static_cast<std::size_t>(r)] = Value::of_array(std::move(part));
        }
        return;
      }
      case CommKind::Gather: {
        std::vector<Value> contribs = all_contributions(info);
        Value gathered = concat_values(contribs);
        for (int r = 0; r < size_; ++r)
          results[static_cast<std::size_t>(r)] =
              r == info.root ? gathered : Value::of_array({});
        return;
      }
      case CommKind::Reduce: {
        std::vector<Value> contribs = all_contributions(info);
        Value folded = try_fold(info.op, contribs);
        for (int r = 0; r < size_; ++r)
          results[static_cast<std::size_t>(r)] =
              r == info.root ? folded : contribs[static_cast<std::size_t>(r)];
        return;
      }
      case CommKind::Allgather: {
        Value gathered = concat_values(all_contributions(info));
        for (int r = 0; r < size_; ++r) results[static_cast<std::size_t>(r)] = gathered;
        return;
      }
      case CommKind::Allreduce: {
        Value folded = try_fold(info.op, all_contributions(info));
        for (int r = 0; r < size_; ++r) results[static_cast<std::size_t>(r)] = folded;
        return;
      }
      default: throw FoldError{"bad collective kind"};
    }
  }

  static Value try_fold(ReduceOp op, const std::vector<Value>& contributions) {
    try {
      return fold_values(op, contributions);
    } catch (const EvalError& e) {
      throw FoldError{e.what()};
    }
  }

  const Value* contribution_of(const CommitInfo& info, int rank) const {
    for (const auto& [r, v] : info.contributions)
      if (r == rank) return &v;
    return nullptr;
  }

  std::vector<Value> all_contributions(const CommitInfo& info) const {
    if (static_cast<int>(info.contributions.size()) != size_)
      throw FoldError{"collective is missing contributions"};
    std::vector<Value> out;
    out.reserve(info.contributions.size());
    for (const auto& [r, v] : info.contributions) out.push_back(v);
    return out;
  }

  void collective_fault(const std::string& message) {
    for (auto& vm : vms_) {
      if (vm.status() == RankStatus::Blocked) vm.poison(message);
    }
  }

  SchedOutcome deadlock() {
    out_.status = RunStatus::Deadlocked;
    // wait-for edges: a blocked sender waits on its target, a blocked
    // receiver on its source; collectives wait on everyone.
    std::vector<int> edge(static_cast<std::size_t>(size_), -1);
    std::vector<bool> blocked(static_cast<std::size_t>(size_), false);
    for (int r = 0; r < size_; ++r) {
      const RankVM& vm = vms_[static_cast<std::size_t>(r)];
      if (vm.status() != RankStatus::Blocked) continue;
      blocked[static_cast<std::size_t>(r)] = true;
      const PendingOp& p = vm.pending();
      if (p.kind == CommKind::Send || p.kind == CommKind::Recv)
        if (p.peer >= 0 && p.peer < size_) edge[static_cast<std::size_t>(r)] = p.peer;
    }
    for (int start = 0; start < size_; ++start) {
      if (!blocked[static_cast<std::size_t>(start)]) continue;
      std::vector<int> path;
      std::vector<int> seen(static_cast<std::size_t>(size_), -1);
      int cur = start;
      while (cur >= 0 && blocked[static_cast<std::size_t>(cur)] &&
             seen[static_cast<std::size_t>(cur)] < 0) {
        seen[static_cast<std::size_t>(cur)] = static_cast<int>(path.size());
        path.push_back(cur);
        cur = edge[static_cast<std::size_t>(cur)];
      }
      if (cur >= 0 && blocked[static_cast<std::size_t>(cur)] &&
          seen[static_cast<std::size_t>(cur)] >= 0) {
        // rotate so the smallest rank in the cycle leads
        std::vector<int> cycle(path.begin() + seen[static_cast<std::size_t>(cur)], path.end());
        auto min_it = std::min_element(cycle.begin(), cycle.end());
        std::rotate(cycle.begin(), min_it, cycle.end());
        for (int r : cycle)
          out_.cycle.push_back(
              {r, vms_[static_cast<std::size_t>(r)].pending().describe()});
        return finish(RunStatus::Deadlocked);
      }
    }
    // No point-to-point cycle: report the whole blocked set (unmatched
    // collective or a wait on a terminated rank).
    for (int r = 0; r < size_; ++r)
      if (blocked[static_cast<std::size_t>(r)])
        out_.cycle.push_back({r, vms_[static_cast<std::size_t>(r)].pending().describe()});
    return finish(RunStatus::Deadlocked);
  }

  SchedOutcome finish(RunStatus status) {
    out_.status = status;
    for (const auto& vm : vms_) {
      RankFinal f;
      f.status = vm.status();
      if (vm.status() == RankStatus::Blocked) {
        f.pending = vm.pending().describe();
        f.span = vm.pending().span;
      }
      if (vm.status() == RankStatus::Faulted) {
        f.error = vm.fault().message;
        f.span = vm.fault().span;
      }
      out_.ranks.push_back(std::move(f));
    }
    return out_;
  }

  SchedulerOptions opts_;
  const SchedulerCallbacks* cb_;
  std::mt19937_64 rng_;
  std::vector<RankVM> vms_;
  int size_ = 0;
  std::int64_t budget_ = 0;
  SchedOutcome out_;
};

}  // namespace

SchedOutcome run_scheduler(const Program& prog, const Bindings& b, const SchedulerOptions& opts,
                           const SchedulerCallbacks* callbacks) {
  Scheduler scheduler(prog, b, opts, callbacks);
  return scheduler.run();
}

DeadlockReport run(const Program& prog, const Bindings& b, const SchedulerOptions& opts,
                   const std::function<void(const CommitInfo&)>& trace) {
  SchedulerCallbacks cb;
  cb.trace = trace;
  SchedOutcome outcome = run_scheduler(prog, b, opts, trace ? &cb : nullptr);
  DeadlockReport report;
  report.deadlocked = outcome.status == RunStatus::Deadlocked;
  report.budget_exhausted = outcome.status == RunStatus::BudgetExhausted;
  report.wait_for_cycle = outcome.cycle;
  report.steps_executed = outcome.commits;
  report.ranks = outcome.ranks;
  return report;
}

// ---- canonical programs ----

namespace {

ExprPtr value_to_expr(const Value& v) {
  if (v.is_array()) {
    std::vector<ExprPtr> items;
    items.reserve(v.as_array().size());
    for (const Value& item : v.as_array()) items.push_back(value_to_expr(item));
    return Expr::array(std::move(items));
  }
  return Expr::lit_value(v);
}

}  // namespace

std::vector<std::vector<StmtPtr>> synthesize_per_rank(const GlobalProtocol& proto, int size,
                                                      const Env& env) {
  std::vector<std::vector<LocalAction>> table = expansion_table(proto, size, env);
  std::vector<std::vector<StmtPtr>> per_rank(static_cast<std::size_t>(size));

  for (int rank = 0; rank < size; ++rank) {
    // Re-walk the projection to pick up the same witness environment the
    // table used; values must match what expansion_table checked.
    LocalState s = make_local_state(proto, size, rank, env);
    auto& stmts = per_rank[static_cast<std::size_t>(rank)];
    int binder = 0;
    for (const LocalAction& a : table[static_cast<std::size_t>(rank)]) {
      auto fresh = [&binder]() { return "_r" + std::to_string(binder++); };
      std::optional<Value> v;
      switch (a.kind) {
        case LocalAction::Kind::Send:
          v = action_witness(a, s.env);
          stmts.push_back(Stmt::comm_stmt(CommKind::Send, "",
                                          Expr::lit_value(Value::of_int(a.peer)),
                                          value_to_expr(*v)));
          break;
        case LocalAction::Kind::Recv:
          stmts.push_back(Stmt::comm_stmt(CommKind::Recv, fresh(),
                                          Expr::lit_value(Value::of_int(a.peer)), nullptr));
          break;
        case LocalAction::Kind::Broadcast:
          v = action_witness(a, s.env);
          stmts.push_back(Stmt::comm_stmt(CommKind::Broadcast, fresh(),
                                          Expr::lit_value(Value::of_int(a.peer)),
                                          value_to_expr(*v)));
          break;
        case LocalAction::Kind::Scatter: {
          if (a.peer == rank) v = action_witness(a, s.env);
          ExprPtr payload = v ? value_to_expr(*v) : Expr::lit_value(Value::of_int(0));
          stmts.push_back(Stmt::comm_stmt(CommKind::Scatter, fresh(),
                                          Expr::lit_value(Value::of_int(a.peer)), payload));
          break;
        }
        case LocalAction::Kind::Gather:
          v = action_witness(a, s.env);
          stmts.push_back(Stmt::comm_stmt(CommKind::Gather, fresh(),
                                          Expr::lit_value(Value::of_int(a.peer)),
                                          value_to_expr(*v)));
          break;
        case LocalAction::Kind::Reduce:
          v = action_witness(a, s.env);
          stmts.push_back(Stmt::comm_stmt(CommKind::Reduce, fresh(),
                                          Expr::lit_value(Value::of_int(a.peer)),
                                          value_to_expr(*v), a.op));
          break;
        case LocalAction::Kind::Allgather:
          v = action_witness(a, s.env);
          stmts.push_back(
              Stmt::comm_stmt(CommKind::Allgather, fresh(), nullptr, value_to_expr(*v)));
          break;
        case LocalAction::Kind::Allreduce:
          v = action_witness(a, s.env);
          stmts.push_back(
              Stmt::comm_stmt(CommKind::Allreduce, fresh(), nullptr, value_to_expr(*v), a.op));
          break;
        case LocalAction::Kind::Apply:
          v = action_witness(a, s.env);
          stmts.push_back(Stmt::comm_stmt(CommKind::Apply, "", nullptr, value_to_expr(*v)));
          break;
        case LocalAction::Kind::EnterChoice:
          break;  // no program-side marker
      }
      std::optional<Value> adv, bound;
      if (a.binds_value() || a.kind == LocalAction::Kind::Send ||
          (a.is_collective() && a.peer == rank)) {
        adv = v ? v : std::optional<Value>(action_witness(a, s.env));
        bound = witness_binding(a, *adv, size);
      }
      s = advance(s, a, adv, bound);
    }
  }
  return per_rank;
}

Program assemble_spmd(const std::vector<std::vector<StmtPtr>>& per_rank) {
  Program prog;
  bool all_empty = true;
  for (const auto& stmts : per_rank) all_empty = all_empty && stmts.empty();
  if (all_empty) return prog;
  // if (rank = 0) {...} else { if (rank = 1) {...} else { ... } }
  std::vector<StmtPtr> acc;
  for (std::size_t r = per_rank.size(); r-- > 0;) {
    if (r == per_rank.size() - 1) {
      acc = per_rank[r];
      continue;
    }
    ExprPtr cond = Expr::binary(Expr::Kind::Eq, Expr::var("rank"),
                                Expr::lit_value(Value::of_int(static_cast<std::int64_t>(r))));
    std::vector<StmtPtr> wrapped;
    wrapped.push_back(Stmt::if_else(cond, per_rank[r], acc));
    acc = std::move(wrapped);
  }
  prog.body = std::move(acc);
  return prog;
}

Program synthesize(const GlobalProtocol& proto, int size, const Env& env) {
  return assemble_spmd(synthesize_per_rank(proto, size, env));
}

}  // namespace partypes
