#include "partypes/eval.hpp"

#include <algorithm>
#include <cmath>

#include "partypes/printer.hpp"

namespace partypes {

Env Env::with_size(std::int64_t size) { return Env().extended("size", Value::of_int(size)); }

Env Env::extended(std::string name, Value v) const {
  Env out;
  out.head_ = std::make_shared<Node>(Node{std::move(name), std::move(v), head_});
  return out;
}

const Value* Env::lookup(const std::string& name) const {
  for (const Node* n = head_.get(); n; n = n->next.get())
    if (n->name == name) return &n->value;
  return nullptr;
}

std::int64_t Env::size_value() const {
  const Value* v = lookup("size");
  if (!v || !v->is_int())
    throw EvalError(EvalErrorKind::UnboundVariable, "environment does not bind size");
  return v->as_int();
}

std::int64_t euclid_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  std::int64_t r = a % b;
  if (r < 0) q += (b > 0 ? -1 : 1);
  return q;
}

std::int64_t euclid_mod(std::int64_t a, std::int64_t b) {
  std::int64_t r = a % b;
  if (r < 0) r += (b > 0 ? b : -b);
  return r;
}

namespace {

Value fold_pair(ReduceOp op, const Value& a, const Value& b) {
  if (a.is_array() || b.is_array()) {
    if (!a.is_array() || !b.is_array() || a.as_array().size() != b.as_array().size())
      throw EvalError(EvalErrorKind::TypeMismatch, "reduction over arrays of different shape");
    std::vector<Value> out;
    out.reserve(a.as_array().size());
    for (std::size_t i = 0; i < a.as_array().size(); ++i)
      out.push_back(fold_pair(op, a.as_array()[i], b.as_array()[i]));
    return Value::of_array(std::move(out));
  }
  if (a.is_int() != b.is_int())
    throw EvalError(EvalErrorKind::TypeMismatch, "reduction over mixed integer/float values");
  if (a.is_int()) {
    switch (op) {
      case ReduceOp::Max: return Value::of_int(std::max(a.as_int(), b.as_int()));
      case ReduceOp::Min: return Value::of_int(std::min(a.as_int(), b.as_int()));
      case ReduceOp::Sum: return Value::of_int(a.as_int() + b.as_int());
    }
  }
  switch (op) {
    case ReduceOp::Max: return Value::of_float(std::max(a.as_float(), b.as_float()));
    case ReduceOp::Min: return Value::of_float(std::min(a.as_float(), b.as_float()));
    case ReduceOp::Sum: return Value::of_float(a.as_float() + b.as_float());
  }
  throw EvalError(EvalErrorKind::TypeMismatch, "bad reduction operator");
}

}  // namespace

Value fold_values(ReduceOp op, const std::vector<Value>& contributions) {
  if (contributions.empty())
    throw EvalError(EvalErrorKind::TypeMismatch, "reduction over an empty contribution list");
  Value acc = contributions.front();
  for (std::size_t i = 1; i < contributions.size(); ++i)
    acc = fold_pair(op, acc, contributions[i]);
  return acc;
}

Value concat_values(const std::vector<Value>& contributions) {
  std::vector<Value> out;
  for (const Value& c : contributions) {
    if (c.is_array())
      out.insert(out.end(), c.as_array().begin(), c.as_array().end());
    else
      out.push_back(c);
  }
  return Value::of_array(std::move(out));
}

namespace {

// Stack-linked overlay so hot paths (witness scans, refinement checks) can
// extend the environment without allocating.
struct Scope {
  const Env* env = nullptr;
  const Scope* parent = nullptr;
  const std::string* name = nullptr;
  const Value* value = nullptr;

  const Value* lookup(const std::string& n) const {
    for (const Scope* s = this; s; s = s->parent) {
      if (s->name && *s->name == n) return s->value;
      if (s->env) return s->env->lookup(n);
    }
    return nullptr;
  }
};

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

Value eval_index_scoped(const IndexTerm& t, const Scope& scope);

std::int64_t eval_int_operand(const IndexTerm& t, const Scope& scope, const char* what) {
  Value v = eval_index_scoped(t, scope);
  if (!v.is_int())
    throw EvalError(EvalErrorKind::TypeMismatch,
                    std::string(what) + " requires an integer, got " + v.to_string(), t.span);
  return v.as_int();
}

Value eval_index_scoped(const IndexTerm& t, const Scope& scope) {
  using K = IndexTerm::Kind;
  switch (t.kind) {
    case K::Var: {
      const Value* v = scope.lookup(t.name);
      if (!v) throw EvalError(EvalErrorKind::UnboundVariable, "unbound variable " + t.name, t.span);
      return *v;
    }
    case K::Lit: return t.lit;
    case K::Add: return Value::of_int(wrap_add(eval_int_operand(*t.lhs, scope, "addition"),
                                               eval_int_operand(*t.rhs, scope, "addition")));
    case K::Sub: return Value::of_int(wrap_sub(eval_int_operand(*t.lhs, scope, "subtraction"),
                                               eval_int_operand(*t.rhs, scope, "subtraction")));
    case K::Mul: return Value::of_int(wrap_mul(eval_int_operand(*t.lhs, scope, "multiplication"),
                                               eval_int_operand(*t.rhs, scope, "multiplication")));
    case K::Div: {
      std::int64_t a = eval_int_operand(*t.lhs, scope, "division");
      std::int64_t b = eval_int_operand(*t.rhs, scope, "division");
      if (b == 0) throw EvalError(EvalErrorKind::DivisionByZero, "division by zero", t.span);
      return Value::of_int(euclid_div(a, b));
    }
    case K::Mod: {
      std::int64_t a = eval_int_operand(*t.lhs, scope, "modulo");
      std::int64_t b = eval_int_operand(*t.rhs, scope, "modulo");
      if (b == 0) throw EvalError(EvalErrorKind::DivisionByZero, "modulo by zero", t.span);
      return Value::of_int(euclid_mod(a, b));
    }
    case K::Max: return Value::of_int(std::max(eval_int_operand(*t.lhs, scope, "max"),
                                               eval_int_operand(*t.rhs, scope, "max")));
    case K::Min: return Value::of_int(std::min(eval_int_operand(*t.lhs, scope, "min"),
                                               eval_int_operand(*t.rhs, scope, "min")));
    case K::Length: {
      Value v = eval_index_scoped(*t.lhs, scope);
      if (!v.is_array())
        throw EvalError(EvalErrorKind::TypeMismatch, "length of non-array " + v.to_string(), t.span);
      return Value::of_int(static_cast<std::int64_t>(v.as_array().size()));
    }
    case K::At: {
      Value arr = eval_index_scoped(*t.lhs, scope);
      if (!arr.is_array())
        throw EvalError(EvalErrorKind::TypeMismatch, "indexing into non-array " + arr.to_string(),
                        t.span);
      std::int64_t i = eval_int_operand(*t.rhs, scope, "index");
      if (i < 0 || i >= static_cast<std::int64_t>(arr.as_array().size()))
        throw EvalError(EvalErrorKind::IndexOutOfRange,
                        "index " + std::to_string(i) + " out of range for length " +
                            std::to_string(arr.as_array().size()),
                        t.span);
      return arr.as_array()[static_cast<std::size_t>(i)];
    }
  }
  throw EvalError(EvalErrorKind::TypeMismatch, "malformed index term", t.span);
}

bool eval_prop_scoped(const Prop& p, const Scope& scope) {
  using K = Prop::Kind;
  auto cmp = [&](auto f) {
    Value a = eval_index_scoped(*p.lhs, scope);
    Value b = eval_index_scoped(*p.rhs, scope);
    if (a.is_array() || b.is_array())
      throw EvalError(EvalErrorKind::TypeMismatch, "comparison over arrays", p.span);
    if (a.is_int() && b.is_int()) return f(a.as_int(), b.as_int());
    return f(a.numeric(), b.numeric());
  };
  switch (p.kind) {
    case K::True: return true;
    case K::Leq: return cmp([](auto a, auto b) { return a <= b; });
    case K::Lt: return cmp([](auto a, auto b) { return a < b; });
    case K::Eq: return cmp([](auto a, auto b) { return a == b; });
    case K::Geq: return cmp([](auto a, auto b) { return a >= b; });
    case K::Gt: return cmp([](auto a, auto b) { return a > b; });
    case K::Neq: return cmp([](auto a, auto b) { return a != b; });
    case K::And: return eval_prop_scoped(*p.left, scope) && eval_prop_scoped(*p.right, scope);
    case K::Or: return eval_prop_scoped(*p.left, scope) || eval_prop_scoped(*p.right, scope);
    case K::Not: return !eval_prop_scoped(*p.left, scope);
  }
  throw EvalError(EvalErrorKind::TypeMismatch, "malformed proposition", p.span);
}

CheckResult yes_result() { return {CheckResult::Outcome::Yes, nullptr, {}}; }
CheckResult no_result(const Datatype& d) { return {CheckResult::Outcome::No, &d, {}}; }
CheckResult error_result(std::string what) {
  return {CheckResult::Outcome::Error, nullptr, std::move(what)};
}

CheckResult check_value_scoped(const Value& v, const Datatype& d, const Scope& scope) {
  switch (d.kind) {
    case Datatype::Kind::Integer: return v.is_int() ? yes_result() : no_result(d);
    case Datatype::Kind::Float: return v.is_float() ? yes_result() : no_result(d);
    case Datatype::Kind::Array: {
      if (!v.is_array()) return no_result(d);
      if (d.length) {
        Value n;
        try {
          n = eval_index_scoped(*d.length, scope);
        } catch (const EvalError& e) {
          return error_result(e.what());
        }
        if (!n.is_int()) return error_result("array length is not an integer");
        if (n.as_int() != static_cast<std::int64_t>(v.as_array().size())) return no_result(d);
      }
      for (const Value& item : v.as_array()) {
        CheckResult r = check_value_scoped(item, *d.elem, scope);
        if (!r.yes()) return r;
      }
      return yes_result();
    }
    case Datatype::Kind::Refinement: {
      CheckResult base = check_value_scoped(v, *d.elem, scope);
      if (!base.yes()) return base;
      Scope inner{nullptr, &scope, &d.var, &v};
      try {
        if (!eval_prop_scoped(*d.prop, inner)) return no_result(d);
      } catch (const EvalError& e) {
        return error_result(e.what());
      }
      return yes_result();
    }
  }
  return error_result("malformed datatype");
}

}  // namespace

std::string CheckResult::detail() const {
  if (outcome == Outcome::Error) return error;
  if (failed) return pretty(*failed);
  return {};
}

Value eval_index(const IndexTerm& t, const Env& env) {
  Scope scope{&env, nullptr, nullptr, nullptr};
  return eval_index_scoped(t, scope);
}

bool eval_prop(const Prop& p, const Env& env) {
  Scope scope{&env, nullptr, nullptr, nullptr};
  return eval_prop_scoped(p, scope);
}

CheckResult check_value(const Value& v, const Datatype& d, const Env& env) {
  Scope scope{&env, nullptr, nullptr, nullptr};
  return check_value_scoped(v, d, scope);
}

// ---- substitution ----

IndexTermPtr subst(const IndexTermPtr& t, const std::string& var, const Value& v) {
  if (!t) return t;
  using K = IndexTerm::Kind;
  switch (t->kind) {
    case K::Var: return t->name == var ? IndexTerm::value_lit(v, t->span) : t;
    case K::Lit: return t;
    case K::Length: {
      auto arg = subst(t->lhs, var, v);
      if (arg == t->lhs) return t;
      return IndexTerm::length(arg, t->span);
    }
    default: {
      auto l = subst(t->lhs, var, v);
      auto r = subst(t->rhs, var, v);
      if (l == t->lhs && r == t->rhs) return t;
      return IndexTerm::binary(t->kind, l, r, t->span);
    }
  }
}

PropPtr subst(const PropPtr& p, const std::string& var, const Value& v) {
  if (!p) return p;
  using K = Prop::Kind;
  switch (p->kind) {
    case K::True: return p;
    case K::And:
    case K::Or: {
      auto l = subst(p->left, var, v);
      auto r = subst(p->right, var, v);
      if (l == p->left && r == p->right) return p;
      auto out = std::make_shared<Prop>(*p);
      out->left = l;
      out->right = r;
      return out;
    }
    case K::Not: {
      auto l = subst(p->left, var, v);
      if (l == p->left) return p;
      auto out = std::make_shared<Prop>(*p);
      out->left = l;
      return out;
    }
    default: {
      auto l = subst(p->lhs, var, v);
      auto r = subst(p->rhs, var, v);
      if (l == p->lhs && r == p->rhs) return p;
      auto out = std::make_shared<Prop>(*p);
      out->lhs = l;
      out->rhs = r;
      return out;
    }
  }
}

DatatypePtr subst(const DatatypePtr& d, const std::string& var, const Value& v) {
  if (!d) return d;
  switch (d->kind) {
    case Datatype::Kind::Integer:
    case Datatype::Kind::Float: return d;
    case Datatype::Kind::Array: {
      auto elem = subst(d->elem, var, v);
      auto len = subst(d->length, var, v);
      if (elem == d->elem && len == d->length) return d;
      return Datatype::array(elem, len, d->span);
    }
    case Datatype::Kind::Refinement: {
      auto base = subst(d->elem, var, v);
      auto prop = d->var == var ? d->prop : subst(d->prop, var, v);
      if (base == d->elem && prop == d->prop) return d;
      return Datatype::refinement(d->var, base, prop, d->span);
    }
  }
  return d;
}

TermPtr subst(const TermPtr& t, const std::string& var, const Value& v) {
  if (!t) return t;
  using K = ProtocolTerm::Kind;
  auto copy = [&]() { return std::make_shared<ProtocolTerm>(*t); };
  switch (t->kind) {
    case K::Skip: return t;
    case K::Message: {
      auto out = copy();
      out->from = subst(t->from, var, v);
      out->to = subst(t->to, var, v);
      out->payload = subst(t->payload, var, v);
      return out;
    }
    case K::Scatter:
    case K::Gather:
    case K::Reduce: {
      auto out = copy();
      out->from = subst(t->from, var, v);
      out->payload = subst(t->payload, var, v);
      return out;
    }
    case K::Broadcast:
    case K::Allgather:
    case K::Allreduce:
    case K::Val: {
      auto out = copy();
      out->from = subst(t->from, var, v);
      if (t->var == var) return t->from == out->from ? t : TermPtr(out);  // shadowed
      out->payload = subst(t->payload, var, v);
      out->cont = subst(t->cont, var, v);
      return out;
    }
    case K::Seq: {
      auto out = copy();
      for (auto& item : out->items) item = subst(item, var, v);
      return out;
    }
    case K::Foreach: {
      auto out = copy();
      out->lo = subst(t->lo, var, v);
      out->hi = subst(t->hi, var, v);
      if (t->var != var) out->body = subst(t->body, var, v);
      return out;
    }
    case K::Choice: {
      auto out = copy();
      out->cond = subst(t->cond, var, v);
      out->then_branch = subst(t->then_branch, var, v);
      out->else_branch = subst(t->else_branch, var, v);
      return out;
    }
  }
  return t;
}

// ---- normalization ----

namespace {
void flatten_into(const TermPtr& t, std::vector<TermPtr>& out) {
  TermPtr n = normalize(t);
  if (!n || n->kind == ProtocolTerm::Kind::Skip) return;
  if (n->kind == ProtocolTerm::Kind::Seq) {
    out.insert(out.end(), n->items.begin(), n->items.end());
  } else {
    out.push_back(n);
  }
}
}  // namespace

TermPtr normalize(const TermPtr& t) {
  if (!t) return ProtocolTerm::skip();
  using K = ProtocolTerm::Kind;
  switch (t->kind) {
    case K::Seq: {
      std::vector<TermPtr> items;
      for (const auto& item : t->items) flatten_into(item, items);
      if (items.empty()) return ProtocolTerm::skip(t->span);
      if (items.size() == 1) return items[0];
      return ProtocolTerm::seq(std::move(items), t->span);
    }
    case K::Broadcast:
    case K::Allgather:
    case K::Allreduce:
    case K::Val: {
      auto out = std::make_shared<ProtocolTerm>(*t);
      out->cont = normalize(t->cont);
      return out;
    }
    case K::Foreach: {
      auto out = std::make_shared<ProtocolTerm>(*t);
      out->body = normalize(t->body);
      return out;
    }
    case K::Choice: {
      auto out = std::make_shared<ProtocolTerm>(*t);
      out->then_branch = normalize(t->then_branch);
      out->else_branch = normalize(t->else_branch);
      return out;
    }
    default: return t;
  }
}

// ---- witnesses ----

namespace {

struct BaseShape {
  enum class Kind { Integer, Float, Array } kind;
  const Datatype* elem = nullptr;  // Array element type (innermost non-refined)
};

// Innermost base of a refinement chain.
BaseShape base_shape(const Datatype& d) {
  const Datatype* cur = &d;
  while (cur->kind == Datatype::Kind::Refinement) cur = cur->elem.get();
  switch (cur->kind) {
    case Datatype::Kind::Integer: return {BaseShape::Kind::Integer, nullptr};
    case Datatype::Kind::Float: return {BaseShape::Kind::Float, nullptr};
    default: return {BaseShape::Kind::Array, cur->elem.get()};
  }
}

bool has_refinement(const Datatype& d) {
  if (d.kind == Datatype::Kind::Refinement) return true;
  if (d.kind == Datatype::Kind::Array) return d.length != nullptr;
  return false;
}

CheckResult check_candidate(const Value& v, const Datatype& d, const Env& env,
                            const std::string& binder_var) {
  if (binder_var.empty()) return check_value(v, d, env);
  return check_value(v, d, env.extended(binder_var, v));
}

Value scalar_candidate(BaseShape::Kind kind, std::int64_t n) {
  return kind == BaseShape::Kind::Integer ? Value::of_int(n)
                                          : Value::of_float(static_cast<double>(n));
}

std::optional<Value> array_candidate(const Datatype& elem, const Env& env, std::int64_t len);

std::optional<Value> witness_impl(const Datatype& d, const Env& env,
                                  const std::string& binder_var) {
  BaseShape shape = base_shape(d);
  if (shape.kind == BaseShape::Kind::Array) {
    for (std::int64_t len = 0; len <= kWitnessArrayScanBound; ++len) {
      auto candidate = array_candidate(*shape.elem, env, len);
      if (!candidate) return std::nullopt;
      if (check_candidate(*candidate, d, env, binder_var).yes()) return candidate;
    }
    return std::nullopt;
  }
  if (!has_refinement(d))
    return shape.kind == BaseShape::Kind::Integer ? Value::of_int(0) : Value::of_float(0.0);
  // Outward from zero: 0, 1, -1, 2, -2, ...
  for (std::int64_t m = 0; m <= kWitnessScanBound; ++m) {
    Value up = scalar_candidate(shape.kind, m);
    if (check_candidate(up, d, env, binder_var).yes()) return up;
    if (m > 0) {
      Value down = scalar_candidate(shape.kind, -m);
      if (check_candidate(down, d, env, binder_var).yes()) return down;
    }
  }
  return std::nullopt;
}

std::optional<Value> array_candidate(const Datatype& elem, const Env& env, std::int64_t len) {
  auto w = witness_impl(elem, env, "");
  if (!w) return std::nullopt;
  return Value::of_array(std::vector<Value>(static_cast<std::size_t>(len), *w));
}

}  // namespace

std::optional<Value> witness_value(const Datatype& d, const Env& env,
                                   const std::string& binder_var) {
  return witness_impl(d, env, binder_var);
}

std::vector<Value> witness_set(const Datatype& d, const Env& env, const std::string& binder_var) {
  std::vector<Value> out;
  auto push_unique = [&out](const Value& v) {
    for (const Value& seen : out)
      if (seen == v) return;
    out.push_back(v);
  };

  BaseShape shape = base_shape(d);
  if (shape.kind == BaseShape::Kind::Array) {
    if (!has_refinement(d)) {
      for (std::int64_t len : {0, 1, 2}) {
        auto c = array_candidate(*shape.elem, env, len);
        if (c) push_unique(*c);
      }
      return out;
    }
    std::optional<std::int64_t> min_len;
    for (std::int64_t len = 0; len <= kWitnessArrayBoundaryBound; ++len) {
      auto c = array_candidate(*shape.elem, env, len);
      if (c && check_candidate(*c, d, env, binder_var).yes()) {
        min_len = len;
        push_unique(*c);
        break;
      }
    }
    if (!min_len) return out;
    auto next = array_candidate(*shape.elem, env, *min_len + 1);
    if (next && check_candidate(*next, d, env, binder_var).yes()) push_unique(*next);
    for (std::int64_t len = kWitnessArrayBoundaryBound; len > *min_len; --len) {
      auto c = array_candidate(*shape.elem, env, len);
      if (c && check_candidate(*c, d, env, binder_var).yes()) {
        push_unique(*c);
        break;
      }
    }
    return out;
  }

  if (!has_refinement(d)) {
    for (std::int64_t n : {0, 1, 2}) push_unique(scalar_candidate(shape.kind, n));
    return out;
  }
  std::optional<std::int64_t> min_sat;
  for (std::int64_t n = -kWitnessScanBound; n <= kWitnessScanBound; ++n) {
    if (check_candidate(scalar_candidate(shape.kind, n), d, env, binder_var).yes()) {
      min_sat = n;
      break;
    }
  }
  if (!min_sat) return out;
  push_unique(scalar_candidate(shape.kind, *min_sat));
  Value bump = scalar_candidate(shape.kind, *min_sat + 1);
  if (*min_sat + 1 <= kWitnessScanBound && check_candidate(bump, d, env, binder_var).yes())
    push_unique(bump);
  for (std::int64_t n = kWitnessScanBound; n > *min_sat; --n) {
    if (check_candidate(scalar_candidate(shape.kind, n), d, env, binder_var).yes()) {
      push_unique(scalar_candidate(shape.kind, n));
      break;
    }
  }
  return out;
}

}  // namespace partypes
