#include "partypes/interp.hpp"

#include <sstream>

#include "partypes/eval.hpp"

namespace partypes {

namespace {

struct Fault {
  std::string message;
  SourceSpan span;
};

[[noreturn]] void raise_fault(const std::string& msg, const SourceSpan& span) {
  throw Fault{msg, span};
}

std::int64_t expect_int(const Value& v, const char* what, const SourceSpan& span) {
  if (!v.is_int()) raise_fault(std::string(what) + " must be an integer, got " + v.to_string(), span);
  return v.as_int();
}

bool truthy(const Value& v, const SourceSpan& span) {
  return expect_int(v, "condition", span) != 0;
}

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

Value arith(Expr::Kind op, const Value& a, const Value& b, const SourceSpan& span) {
  using K = Expr::Kind;
  if (a.is_array() || b.is_array()) raise_fault("arithmetic over arrays", span);
  bool ints = a.is_int() && b.is_int();
  switch (op) {
    case K::Add:
      return ints ? Value::of_int(wrap_add(a.as_int(), b.as_int()))
                  : Value::of_float(a.numeric() + b.numeric());
    case K::Sub:
      return ints ? Value::of_int(wrap_sub(a.as_int(), b.as_int()))
                  : Value::of_float(a.numeric() - b.numeric());
    case K::Mul:
      return ints ? Value::of_int(wrap_mul(a.as_int(), b.as_int()))
                  : Value::of_float(a.numeric() * b.numeric());
    case K::Div:
      if (ints) {
        if (b.as_int() == 0) raise_fault("division by zero", span);
        return Value::of_int(euclid_div(a.as_int(), b.as_int()));
      }
      return Value::of_float(a.numeric() / b.numeric());
    case K::Mod:
      if (!ints) raise_fault("modulo over floats", span);
      if (b.as_int() == 0) raise_fault("modulo by zero", span);
      return Value::of_int(euclid_mod(a.as_int(), b.as_int()));
    case K::Max:
      if (ints) return Value::of_int(std::max(a.as_int(), b.as_int()));
      return Value::of_float(std::max(a.numeric(), b.numeric()));
    case K::Min:
      if (ints) return Value::of_int(std::min(a.as_int(), b.as_int()));
      return Value::of_float(std::min(a.numeric(), b.numeric()));
    default: raise_fault("bad arithmetic operator", span);
  }
}

Value compare(Expr::Kind op, const Value& a, const Value& b, const SourceSpan& span) {
  using K = Expr::Kind;
  if (a.is_array() || b.is_array()) raise_fault("comparison over arrays", span);
  bool result = false;
  auto cmp = [&](auto x, auto y) {
    switch (op) {
      case K::Lt: return x < y;
      case K::Leq: return x <= y;
      case K::Gt: return x > y;
      case K::Geq: return x >= y;
      case K::Eq: return x == y;
      case K::Neq: return x != y;
      default: return false;
    }
  };
  if (a.is_int() && b.is_int())
    result = cmp(a.as_int(), b.as_int());
  else
    result = cmp(a.numeric(), b.numeric());
  return Value::of_int(result ? 1 : 0);
}

}  // namespace

std::string PendingOp::describe() const {
  std::ostringstream os;
  switch (kind) {
    case CommKind::Send: os << "send to " << peer; break;
    case CommKind::Recv: os << "recv from " << peer; break;
    case CommKind::Broadcast: os << "broadcast root " << peer; break;
    case CommKind::Scatter: os << "scatter root " << peer; break;
    case CommKind::Gather: os << "gather root " << peer; break;
    case CommKind::Reduce: os << "reduce root " << peer << " " << to_string(op); break;
    case CommKind::Allgather: os << "allgather"; break;
    case CommKind::Allreduce: os << "allreduce " << to_string(op); break;
    case CommKind::Apply: os << "apply"; break;
  }
  return os.str();
}

void RankScopes::push() { scopes_.emplace_back(); }
void RankScopes::pop() { scopes_.pop_back(); }

void RankScopes::declare(const std::string& name, Value v, bool mutable_slot,
                         const SourceSpan& span) {
  auto [it, inserted] = scopes_.back().emplace(name, Slot{std::move(v), mutable_slot});
  if (!inserted) raise_fault("variable " + name + " is already declared in this scope", span);
}

void RankScopes::assign(const std::string& name, Value v, const SourceSpan& span) {
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    auto hit = it->find(name);
    if (hit != it->end()) {
      if (!hit->second.mutable_slot) raise_fault("cannot assign to immutable variable " + name, span);
      hit->second.value = std::move(v);
      return;
    }
  }
  raise_fault("assignment to undeclared variable " + name, span);
}

const Value* RankScopes::lookup(const std::string& name) const {
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    auto hit = it->find(name);
    if (hit != it->end()) return &hit->second.value;
  }
  return nullptr;
}

Value eval_expr(const Expr& e, const RankScopes& scopes) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Lit: return e.lit;
    case K::Var: {
      const Value* v = scopes.lookup(e.name);
      if (!v) raise_fault("unbound variable " + e.name, e.span);
      return *v;
    }
    case K::Array: {
      std::vector<Value> items;
      items.reserve(e.items.size());
      for (const auto& item : e.items) items.push_back(eval_expr(*item, scopes));
      for (std::size_t i = 1; i < items.size(); ++i)
        if (!same_shape(items[0], items[i])) raise_fault("heterogeneous array literal", e.span);
      return Value::of_array(std::move(items));
    }
    case K::Neg: {
      Value v = eval_expr(*e.lhs, scopes);
      if (v.is_int()) return Value::of_int(wrap_sub(0, v.as_int()));
      if (v.is_float()) return Value::of_float(-v.as_float());
      raise_fault("negation of an array", e.span);
    }
    case K::Not: {
      Value v = eval_expr(*e.lhs, scopes);
      return Value::of_int(expect_int(v, "not operand", e.span) == 0 ? 1 : 0);
    }
    case K::And: {
      Value a = eval_expr(*e.lhs, scopes);
      if (!truthy(a, e.span)) return Value::of_int(0);
      return Value::of_int(truthy(eval_expr(*e.rhs, scopes), e.span) ? 1 : 0);
    }
    case K::Or: {
      Value a = eval_expr(*e.lhs, scopes);
      if (truthy(a, e.span)) return Value::of_int(1);
      return Value::of_int(truthy(eval_expr(*e.rhs, scopes), e.span) ? 1 : 0);
    }
    case K::Length: {
      Value v = eval_expr(*e.lhs, scopes);
      if (!v.is_array()) raise_fault("length of non-array " + v.to_string(), e.span);
      return Value::of_int(static_cast<std::int64_t>(v.as_array().size()));
    }
    case K::At: {
      Value arr = eval_expr(*e.lhs, scopes);
      if (!arr.is_array()) raise_fault("indexing into non-array " + arr.to_string(), e.span);
      std::int64_t i = expect_int(eval_expr(*e.rhs, scopes), "index", e.span);
      if (i < 0 || i >= static_cast<std::int64_t>(arr.as_array().size()))
        raise_fault("index " + std::to_string(i) + " out of range for length " +
                  std::to_string(arr.as_array().size()),
              e.span);
      return arr.as_array()[static_cast<std::size_t>(i)];
    }
    case K::Lt:
    case K::Leq:
    case K::Gt:
    case K::Geq:
    case K::Eq:
    case K::Neq:
      return compare(e.kind, eval_expr(*e.lhs, scopes), eval_expr(*e.rhs, scopes), e.span);
    default:
      return arith(e.kind, eval_expr(*e.lhs, scopes), eval_expr(*e.rhs, scopes), e.span);
  }
}

RankVM::RankVM(const Program& prog, int rank, int size,
               const std::map<std::string, Value>& externs)
    : prog_(prog), rank_(rank), size_(size) {
  scopes_.declare("rank", Value::of_int(rank), false, prog.span);
  scopes_.declare("size", Value::of_int(size), false, prog.span);
  for (const auto& ext : prog.externs) {
    auto it = externs.find(ext.name);
    scopes_.declare(ext.name, it != externs.end() ? it->second : Value::of_int(0), false,
                    ext.span);
  }
  stack_.push_back(Frame{Frame::Kind::Block, &prog.body, 0, false, "", 0, -1});
}

void RankVM::run_slice(std::int64_t& budget) {
  if (status_ != RankStatus::Running) return;
  try {
    while (status_ == RankStatus::Running) {
      if (budget <= 0) return;  // scheduler reports budget exhaustion
      --budget;
      if (!step()) {
        status_ = RankStatus::Terminated;
        return;
      }
      if (status_ == RankStatus::Blocked) return;
    }
  } catch (const Fault& f) {
    status_ = RankStatus::Faulted;
    fault_ = RuntimeFault{f.message, f.span};
  }
}

bool RankVM::step() {
  while (!stack_.empty()) {
    Frame& top = stack_.back();
    if (top.kind == Frame::Kind::Loop) {
      // `scoped` doubles as "iteration scope is open" for loop frames.
      if (top.scoped) {
        scopes_.pop();
        top.scoped = false;
      }
      if (top.current > top.last) {
        stack_.pop_back();
        continue;
      }
      scopes_.push();
      scopes_.declare(top.var, Value::of_int(top.current), false, {});
      top.scoped = true;
      ++top.current;
      stack_.push_back(Frame{Frame::Kind::Block, top.stmts, 0, false, "", 0, -1});
      return true;
    }
    if (top.next >= top.stmts->size()) {
      if (top.scoped) scopes_.pop();
      stack_.pop_back();
      continue;
    }
    const Stmt& stmt = *(*top.stmts)[top.next++];
    exec(stmt);
    return true;
  }
  return false;
}

void RankVM::exec(const Stmt& stmt) {
  switch (stmt.kind) {
    case Stmt::Kind::Let:
      scopes_.declare(stmt.name, eval_expr(*stmt.expr, scopes_), true, stmt.span);
      return;
    case Stmt::Kind::Assign:
      scopes_.assign(stmt.name, eval_expr(*stmt.expr, scopes_), stmt.span);
      return;
    case Stmt::Kind::If: {
      bool taken = truthy(eval_expr(*stmt.expr, scopes_), stmt.span);
      const auto& body = taken ? stmt.body : stmt.else_body;
      if (!body.empty()) {
        scopes_.push();
        stack_.push_back(Frame{Frame::Kind::Block, &body, 0, true, "", 0, -1});
      }
      return;
    }
    case Stmt::Kind::For: {
      std::int64_t lo = expect_int(eval_expr(*stmt.lo, scopes_), "loop lower bound", stmt.span);
      std::int64_t hi = expect_int(eval_expr(*stmt.hi, scopes_), "loop upper bound", stmt.span);
      if (lo > hi) return;  // empty range
      stack_.push_back(Frame{Frame::Kind::Loop, &stmt.body, 0, false, stmt.name, lo, hi});
      return;
    }
    case Stmt::Kind::Comm: {
      PendingOp op;
      op.kind = stmt.comm;
      op.op = stmt.op;
      op.bind = stmt.bind;
      op.span = stmt.span;
      if (stmt.peer) op.peer = static_cast<int>(expect_int(eval_expr(*stmt.peer, scopes_),
                                                           "peer rank", stmt.span));
      switch (stmt.comm) {
        case CommKind::Send:
        case CommKind::Apply:
        case CommKind::Gather:
        case CommKind::Reduce:
        case CommKind::Allgather:
        case CommKind::Allreduce:
          op.value = eval_expr(*stmt.value, scopes_);
          break;
        case CommKind::Broadcast:
        case CommKind::Scatter:
          // Only the root's payload expression is evaluated.
          if (op.peer == rank_) op.value = eval_expr(*stmt.value, scopes_);
          break;
        case CommKind::Recv: break;
      }
      pending_ = std::move(op);
      status_ = RankStatus::Blocked;
      return;
    }
  }
}

void RankVM::poison(const std::string& message) {
  status_ = RankStatus::Faulted;
  fault_ = RuntimeFault{message, pending_.span};
}

void RankVM::resume(const std::optional<Value>& delivered) {
  if (status_ != RankStatus::Blocked) return;
  try {
    if (!pending_.bind.empty()) {
      if (!delivered.has_value())
        raise_fault("communication did not deliver a value for " + pending_.bind, pending_.span);
      scopes_.declare(pending_.bind, *delivered, true, pending_.span);
    }
    status_ = RankStatus::Running;
  } catch (const Fault& f) {
    status_ = RankStatus::Faulted;
    fault_ = RuntimeFault{f.message, f.span};
  }
}

}  // namespace partypes
