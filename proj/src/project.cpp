#include "partypes/project.hpp"

#include <sstream>

#include "partypes/printer.hpp"

namespace partypes {

namespace {

constexpr std::int64_t kExpansionGuard = 100000;

std::int64_t eval_int(const IndexTerm& t, const Env& env, const char* what) {
  Value v = eval_index(t, env);
  if (!v.is_int())
    throw EvalError(EvalErrorKind::TypeMismatch,
                    std::string(what) + " is not an integer: " + pretty(t), t.span);
  return v.as_int();
}

TermPtr expand_foreach(const ProtocolTerm& t, const Env& env) {
  std::int64_t lo = eval_int(*t.lo, env, "foreach lower bound");
  std::int64_t hi = eval_int(*t.hi, env, "foreach upper bound");
  if (lo > hi) return ProtocolTerm::skip(t.span);
  if (hi - lo + 1 > kExpansionGuard)
    throw EvalError(EvalErrorKind::RangeTooLarge,
                    "foreach range " + std::to_string(lo) + ".." + std::to_string(hi) +
                        " is too large to expand",
                    t.span);
  std::vector<TermPtr> items;
  items.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t i = lo; i <= hi; ++i)
    items.push_back(subst(t.body, t.var, Value::of_int(i)));
  return ProtocolTerm::seq(std::move(items), t.span);
}

struct StepResult {
  bool consumed = false;  // term holds nothing for this rank
  Head head;
};

StepResult consumed() { return StepResult{true, {}}; }

StepResult step(const TermPtr& term, const Env& env, int rank);

// Prepends nothing, appends `rest` to the step result of `term`.
StepResult step_then(const TermPtr& term, const std::vector<TermPtr>& rest, std::size_t rest_from,
                     const Env& env, int rank, const SourceSpan& span) {
  StepResult r = step(term, env, rank);
  if (r.consumed) return r;
  std::vector<TermPtr> after;
  if (r.head.after && r.head.after->kind != ProtocolTerm::Kind::Skip) after.push_back(r.head.after);
  after.insert(after.end(), rest.begin() + static_cast<std::ptrdiff_t>(rest_from), rest.end());
  r.head.after = normalize(ProtocolTerm::seq(std::move(after), span));
  return r;
}

StepResult step(const TermPtr& term, const Env& env, int rank) {
  using K = ProtocolTerm::Kind;
  const ProtocolTerm& t = *term;
  switch (t.kind) {
    case K::Skip: return consumed();
    case K::Message: {
      std::int64_t from = eval_int(*t.from, env, "message source");
      std::int64_t to = eval_int(*t.to, env, "message target");
      if (from == to)
        throw EvalError(EvalErrorKind::TypeMismatch,
                        "message from and to ranks are both " + std::to_string(from), t.span);
      StepResult r;
      if (from == rank) {
        r.head.status = HeadStatus::Action;
        r.head.action = {LocalAction::Kind::Send, static_cast<int>(to), ReduceOp::Sum, "",
                         t.payload, false};
        r.head.after = ProtocolTerm::skip(t.span);
        return r;
      }
      if (to == rank) {
        r.head.status = HeadStatus::Action;
        r.head.action = {LocalAction::Kind::Recv, static_cast<int>(from), ReduceOp::Sum, "",
                         t.payload, false};
        r.head.after = ProtocolTerm::skip(t.span);
        return r;
      }
      return consumed();  // unrelated to this rank: discarded
    }
    case K::Broadcast:
    case K::Allgather:
    case K::Allreduce:
    case K::Val: {
      StepResult r;
      r.head.status = HeadStatus::Action;
      LocalAction::Kind kind = LocalAction::Kind::Apply;
      int root = -1;
      if (t.kind == K::Broadcast) {
        kind = LocalAction::Kind::Broadcast;
        root = static_cast<int>(eval_int(*t.from, env, "collective root"));
      } else if (t.kind == K::Allgather) {
        kind = LocalAction::Kind::Allgather;
      } else if (t.kind == K::Allreduce) {
        kind = LocalAction::Kind::Allreduce;
      }
      r.head.action = {kind, root, t.op, t.var, t.payload, false};
      r.head.scope = t.cont ? t.cont : ProtocolTerm::skip(t.span);
      r.head.after = ProtocolTerm::skip(t.span);
      return r;
    }
    case K::Scatter:
    case K::Gather:
    case K::Reduce: {
      StepResult r;
      r.head.status = HeadStatus::Action;
      LocalAction::Kind kind = LocalAction::Kind::Scatter;
      if (t.kind == K::Gather) kind = LocalAction::Kind::Gather;
      if (t.kind == K::Reduce) kind = LocalAction::Kind::Reduce;
      int root = static_cast<int>(eval_int(*t.from, env, "collective root"));
      r.head.action = {kind, root, t.op, "", t.payload, false};
      r.head.after = ProtocolTerm::skip(t.span);
      return r;
    }
    case K::Seq: {
      for (std::size_t i = 0; i < t.items.size(); ++i) {
        StepResult r = step_then(t.items[i], t.items, i + 1, env, rank, t.span);
        if (!r.consumed) return r;
      }
      return consumed();
    }
    case K::Foreach: {
      TermPtr expanded = expand_foreach(t, env);
      return step(expanded, env, rank);
    }
    case K::Choice: {
      bool taken = eval_prop(*t.cond, env);
      StepResult r;
      r.head.status = HeadStatus::Action;
      r.head.action = {LocalAction::Kind::EnterChoice, -1, ReduceOp::Sum, "", nullptr, taken};
      r.head.after = taken ? t.then_branch : t.else_branch;
      return r;
    }
  }
  return consumed();
}

std::string payload_text(const DatatypePtr& d) { return d ? pretty(*d) : "?"; }

}  // namespace

LocalState make_local_state(const GlobalProtocol& p, int size, int rank, const Env& extra) {
  TermPtr body = subst(p.body, "size", Value::of_int(size));
  Env env = Env::with_size(size);
  // Caller-supplied bindings are applied up front, like size.
  std::set<std::string> free;
  collect_free_vars(*body, free);
  for (const std::string& name : free) {
    if (const Value* v = extra.lookup(name)) {
      body = subst(body, name, *v);
      env = env.extended(name, *v);
    }
  }
  return LocalState{normalize(body), env, rank, size};
}

std::string to_string(const LocalAction& a) {
  std::ostringstream os;
  switch (a.kind) {
    case LocalAction::Kind::Send: os << "send " << a.peer << " : " << payload_text(a.payload); break;
    case LocalAction::Kind::Recv: os << "recv " << a.peer << " : " << payload_text(a.payload); break;
    case LocalAction::Kind::Broadcast:
      os << "broadcast root " << a.peer << " " << a.var << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Scatter:
      os << "scatter root " << a.peer << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Gather:
      os << "gather root " << a.peer << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Reduce:
      os << "reduce root " << a.peer << " " << to_string(a.op) << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Allgather:
      os << "allgather " << a.var << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Allreduce:
      os << "allreduce " << to_string(a.op) << " " << a.var << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::Apply:
      os << "apply " << a.var << " : " << payload_text(a.payload);
      break;
    case LocalAction::Kind::EnterChoice: os << "choice " << (a.took_then ? "then" : "else"); break;
  }
  return os.str();
}

bool same_action(const LocalAction& a, const LocalAction& b) {
  if (a.kind != b.kind || a.peer != b.peer) return false;
  if ((a.kind == LocalAction::Kind::Reduce || a.kind == LocalAction::Kind::Allreduce) &&
      a.op != b.op)
    return false;
  if (a.kind == LocalAction::Kind::EnterChoice) return a.took_then == b.took_then;
  if (a.var != b.var) return false;
  if (!a.payload || !b.payload) return true;  // payload optional on offers
  return alpha_equivalent(*a.payload, *b.payload);
}

Head project_head(const LocalState& s) {
  StepResult r = step(s.residual, s.env, s.rank);
  if (r.consumed) return Head{};
  return r.head;
}

LocalState advance(const LocalState& s, const LocalAction& offered, const std::optional<Value>& v,
                   const std::optional<Value>& bound) {
  Head head = project_head(s);
  if (head.status == HeadStatus::AtSkip)
    throw ProtocolMismatchError("protocol complete (skip)", to_string(offered));
  if (!same_action(head.action, offered))
    throw ProtocolMismatchError(to_string(head.action), to_string(offered));

  const LocalAction& act = head.action;
  const std::optional<Value>& binding = bound.has_value() ? bound : v;
  LocalState next = s;

  // Value checks: senders, apply, and binder actions carry the value here;
  // root-only collectives carry it at the root.
  if (v.has_value() && act.payload) {
    Env check_env =
        act.binds_value() && binding ? s.env.extended(act.var, *binding) : s.env;
    CheckResult r = check_value(*v, *act.payload, check_env);
    if (r.no()) throw RefinementViolationError(pretty(*act.payload), v->to_string());
    if (r.is_error())
      throw EvalError(EvalErrorKind::TypeMismatch,
                      "payload check failed to evaluate: " + r.detail(), s.residual->span);
  }

  if (act.binds_value()) {
    if (!binding.has_value())
      throw EvalError(EvalErrorKind::TypeMismatch,
                      "binder action " + to_string(act) + " requires a value");
    next.env = s.env.extended(act.var, *binding);
    TermPtr scope = subst(head.scope, act.var, *binding);
    next.residual = normalize(
        ProtocolTerm::seq({scope, head.after ? head.after : ProtocolTerm::skip()}, s.residual->span));
  } else {
    next.residual = head.after ? normalize(head.after) : ProtocolTerm::skip();
  }
  return next;
}

bool is_skip(const LocalState& s) { return project_head(s).status == HeadStatus::AtSkip; }

Value action_witness(const LocalAction& a, const Env& env) {
  if (a.binds_value() && !a.var.empty()) {
    if (const Value* bound = env.lookup(a.var)) return *bound;
  }
  if (!a.payload)
    throw EvalError(EvalErrorKind::NoWitness, "action " + to_string(a) + " has no payload");
  auto w = witness_value(*a.payload, env, a.binds_value() ? a.var : "");
  if (!w)
    throw EvalError(EvalErrorKind::NoWitness,
                    "no witness for " + pretty(*a.payload) + " in the bounded scan");
  return *w;
}

// Collectively bound value for a witness contribution: the concatenation or
// fold every rank would observe.
std::optional<Value> witness_binding(const LocalAction& a, const Value& witness, int size) {
  std::vector<Value> contributions(static_cast<std::size_t>(size), witness);
  if (a.kind == LocalAction::Kind::Allgather) return concat_values(contributions);
  if (a.kind == LocalAction::Kind::Allreduce) return fold_values(a.op, contributions);
  return std::nullopt;
}

std::vector<std::vector<LocalAction>> expansion_table(const GlobalProtocol& p, int size,
                                                      const Env& env) {
  std::vector<std::vector<LocalAction>> table(static_cast<std::size_t>(size));
  for (int rank = 0; rank < size; ++rank) {
    LocalState s = make_local_state(p, size, rank, env);
    auto& row = table[static_cast<std::size_t>(rank)];
    while (true) {
      Head head = project_head(s);
      if (head.status == HeadStatus::AtSkip) break;
      if (head.status == HeadStatus::NeedsValue)
        throw EvalError(EvalErrorKind::NoWitness, "unexpected NeedsValue in eager expansion");
      row.push_back(head.action);
      std::optional<Value> v, bound;
      if (head.action.binds_value() ||
          (head.action.kind == LocalAction::Kind::Send ||
           (head.action.is_collective() && head.action.peer == rank))) {
        v = action_witness(head.action, s.env);
        bound = witness_binding(head.action, *v, size);
      }
      s = advance(s, head.action, v, bound);
    }
  }
  return table;
}

}  // namespace partypes
