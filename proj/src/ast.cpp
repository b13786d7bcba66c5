#include "partypes/ast.hpp"

#include <map>

namespace partypes {

IndexTermPtr IndexTerm::var(std::string name, SourceSpan span) {
  auto t = std::make_shared<IndexTerm>();
  t->kind = Kind::Var;
  t->name = std::move(name);
  t->span = span;
  return t;
}

IndexTermPtr IndexTerm::int_lit(std::int64_t v, SourceSpan span) {
  return value_lit(Value::of_int(v), span);
}

IndexTermPtr IndexTerm::value_lit(Value v, SourceSpan span) {
  auto t = std::make_shared<IndexTerm>();
  t->kind = Kind::Lit;
  t->lit = std::move(v);
  t->span = span;
  return t;
}

IndexTermPtr IndexTerm::binary(Kind op, IndexTermPtr l, IndexTermPtr r, SourceSpan span) {
  auto t = std::make_shared<IndexTerm>();
  t->kind = op;
  t->lhs = std::move(l);
  t->rhs = std::move(r);
  t->span = span;
  return t;
}

IndexTermPtr IndexTerm::length(IndexTermPtr arg, SourceSpan span) {
  auto t = std::make_shared<IndexTerm>();
  t->kind = Kind::Length;
  t->lhs = std::move(arg);
  t->span = span;
  return t;
}

IndexTermPtr IndexTerm::at(IndexTermPtr array, IndexTermPtr index, SourceSpan span) {
  auto t = std::make_shared<IndexTerm>();
  t->kind = Kind::At;
  t->lhs = std::move(array);
  t->rhs = std::move(index);
  t->span = span;
  return t;
}

PropPtr Prop::truth(SourceSpan span) {
  auto p = std::make_shared<Prop>();
  p->kind = Kind::True;
  p->span = span;
  return p;
}

PropPtr Prop::compare(Kind op, IndexTermPtr l, IndexTermPtr r, SourceSpan span) {
  auto p = std::make_shared<Prop>();
  p->kind = op;
  p->lhs = std::move(l);
  p->rhs = std::move(r);
  p->span = span;
  return p;
}

PropPtr Prop::conj(PropPtr l, PropPtr r, SourceSpan span) {
  auto p = std::make_shared<Prop>();
  p->kind = Kind::And;
  p->left = std::move(l);
  p->right = std::move(r);
  p->span = span;
  return p;
}

PropPtr Prop::disj(PropPtr l, PropPtr r, SourceSpan span) {
  auto p = std::make_shared<Prop>();
  p->kind = Kind::Or;
  p->left = std::move(l);
  p->right = std::move(r);
  p->span = span;
  return p;
}

PropPtr Prop::negate(PropPtr inner, SourceSpan span) {
  auto p = std::make_shared<Prop>();
  p->kind = Kind::Not;
  p->left = std::move(inner);
  p->span = span;
  return p;
}

DatatypePtr Datatype::integer(SourceSpan span) {
  auto d = std::make_shared<Datatype>();
  d->kind = Kind::Integer;
  d->span = span;
  return d;
}

DatatypePtr Datatype::real(SourceSpan span) {
  auto d = std::make_shared<Datatype>();
  d->kind = Kind::Float;
  d->span = span;
  return d;
}

DatatypePtr Datatype::array(DatatypePtr elem, IndexTermPtr length, SourceSpan span) {
  auto d = std::make_shared<Datatype>();
  d->kind = Kind::Array;
  d->elem = std::move(elem);
  d->length = std::move(length);
  d->span = span;
  return d;
}

DatatypePtr Datatype::refinement(std::string var, DatatypePtr base, PropPtr prop, SourceSpan span) {
  auto d = std::make_shared<Datatype>();
  d->kind = Kind::Refinement;
  d->var = std::move(var);
  d->elem = std::move(base);
  d->prop = std::move(prop);
  d->span = span;
  return d;
}

DatatypePtr Datatype::natural(SourceSpan span) {
  return refinement("x", integer(span),
                    Prop::compare(Prop::Kind::Geq, IndexTerm::var("x"), IndexTerm::int_lit(0)),
                    span);
}

DatatypePtr Datatype::positive(SourceSpan span) {
  return refinement("x", integer(span),
                    Prop::compare(Prop::Kind::Geq, IndexTerm::var("x"), IndexTerm::int_lit(1)),
                    span);
}

DatatypePtr Datatype::sized_array(DatatypePtr elem, IndexTermPtr n, SourceSpan span) {
  std::set<std::string> free;
  if (n) collect_free_vars(*n, free);
  std::string binder = "x";
  int suffix = 0;
  while (free.count(binder)) binder = "_x" + std::to_string(suffix++);
  return refinement(
      binder, array(std::move(elem), nullptr, span),
      Prop::compare(Prop::Kind::Eq, IndexTerm::length(IndexTerm::var(binder)), std::move(n)),
      span);
}

const char* to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::Max: return "max";
    case ReduceOp::Min: return "min";
    case ReduceOp::Sum: return "sum";
  }
  return "?";
}

static std::shared_ptr<ProtocolTerm> blank(ProtocolTerm::Kind kind, SourceSpan span) {
  auto t = std::make_shared<ProtocolTerm>();
  t->kind = kind;
  t->span = span;
  return t;
}

TermPtr ProtocolTerm::skip(SourceSpan span) { return blank(Kind::Skip, span); }

TermPtr ProtocolTerm::message(IndexTermPtr from, IndexTermPtr to, DatatypePtr payload,
                              SourceSpan span) {
  auto t = blank(Kind::Message, span);
  t->from = std::move(from);
  t->to = std::move(to);
  t->payload = std::move(payload);
  return t;
}

TermPtr ProtocolTerm::broadcast(IndexTermPtr root, std::string var, DatatypePtr payload,
                                TermPtr cont, SourceSpan span) {
  auto t = blank(Kind::Broadcast, span);
  t->from = std::move(root);
  t->var = std::move(var);
  t->payload = std::move(payload);
  t->cont = std::move(cont);
  return t;
}

TermPtr ProtocolTerm::scatter(IndexTermPtr root, DatatypePtr payload, SourceSpan span) {
  auto t = blank(Kind::Scatter, span);
  t->from = std::move(root);
  t->payload = std::move(payload);
  return t;
}

TermPtr ProtocolTerm::gather(IndexTermPtr root, DatatypePtr payload, SourceSpan span) {
  auto t = blank(Kind::Gather, span);
  t->from = std::move(root);
  t->payload = std::move(payload);
  return t;
}

TermPtr ProtocolTerm::reduce(IndexTermPtr root, ReduceOp op, DatatypePtr payload, SourceSpan span) {
  auto t = blank(Kind::Reduce, span);
  t->from = std::move(root);
  t->op = op;
  t->payload = std::move(payload);
  return t;
}

TermPtr ProtocolTerm::allgather(std::string var, DatatypePtr payload, TermPtr cont,
                                SourceSpan span) {
  auto t = blank(Kind::Allgather, span);
  t->var = std::move(var);
  t->payload = std::move(payload);
  t->cont = std::move(cont);
  return t;
}

TermPtr ProtocolTerm::allreduce(ReduceOp op, std::string var, DatatypePtr payload, TermPtr cont,
                                SourceSpan span) {
  auto t = blank(Kind::Allreduce, span);
  t->op = op;
  t->var = std::move(var);
  t->payload = std::move(payload);
  t->cont = std::move(cont);
  return t;
}

TermPtr ProtocolTerm::seq(std::vector<TermPtr> items, SourceSpan span) {
  auto t = blank(Kind::Seq, span);
  t->items = std::move(items);
  return t;
}

TermPtr ProtocolTerm::foreach (std::string var, IndexTermPtr lo, IndexTermPtr hi, TermPtr body,
                               SourceSpan span) {
  auto t = blank(Kind::Foreach, span);
  t->var = std::move(var);
  t->lo = std::move(lo);
  t->hi = std::move(hi);
  t->body = std::move(body);
  return t;
}

TermPtr ProtocolTerm::choice(PropPtr cond, TermPtr then_branch, TermPtr else_branch,
                             SourceSpan span) {
  auto t = blank(Kind::Choice, span);
  t->cond = std::move(cond);
  t->then_branch = std::move(then_branch);
  t->else_branch = std::move(else_branch);
  return t;
}

TermPtr ProtocolTerm::val(std::string var, DatatypePtr payload, TermPtr cont, SourceSpan span) {
  auto t = blank(Kind::Val, span);
  t->var = std::move(var);
  t->payload = std::move(payload);
  t->cont = std::move(cont);
  return t;
}

// ---- structural equality ----

static bool eq(const IndexTermPtr& a, const IndexTermPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}
static bool eq(const PropPtr& a, const PropPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}
static bool eq(const DatatypePtr& a, const DatatypePtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}
static bool eq(const TermPtr& a, const TermPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}

bool equal(const IndexTerm& a, const IndexTerm& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case IndexTerm::Kind::Var: return a.name == b.name;
    case IndexTerm::Kind::Lit: return a.lit == b.lit;
    case IndexTerm::Kind::Length: return eq(a.lhs, b.lhs);
    default: return eq(a.lhs, b.lhs) && eq(a.rhs, b.rhs);
  }
}

bool equal(const Prop& a, const Prop& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Prop::Kind::True: return true;
    case Prop::Kind::And:
    case Prop::Kind::Or: return eq(a.left, b.left) && eq(a.right, b.right);
    case Prop::Kind::Not: return eq(a.left, b.left);
    default: return eq(a.lhs, b.lhs) && eq(a.rhs, b.rhs);
  }
}

bool equal(const Datatype& a, const Datatype& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Datatype::Kind::Integer:
    case Datatype::Kind::Float: return true;
    case Datatype::Kind::Array: return eq(a.elem, b.elem) && eq(a.length, b.length);
    case Datatype::Kind::Refinement:
      return a.var == b.var && eq(a.elem, b.elem) && eq(a.prop, b.prop);
  }
  return false;
}

bool equal(const ProtocolTerm& a, const ProtocolTerm& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ProtocolTerm::Kind::Skip: return true;
    case ProtocolTerm::Kind::Message:
      return eq(a.from, b.from) && eq(a.to, b.to) && eq(a.payload, b.payload);
    case ProtocolTerm::Kind::Broadcast:
      return a.var == b.var && eq(a.from, b.from) && eq(a.payload, b.payload) &&
             eq(a.cont, b.cont);
    case ProtocolTerm::Kind::Scatter:
    case ProtocolTerm::Kind::Gather: return eq(a.from, b.from) && eq(a.payload, b.payload);
    case ProtocolTerm::Kind::Reduce:
      return a.op == b.op && eq(a.from, b.from) && eq(a.payload, b.payload);
    case ProtocolTerm::Kind::Allgather:
      return a.var == b.var && eq(a.payload, b.payload) && eq(a.cont, b.cont);
    case ProtocolTerm::Kind::Allreduce:
      return a.op == b.op && a.var == b.var && eq(a.payload, b.payload) && eq(a.cont, b.cont);
    case ProtocolTerm::Kind::Seq: {
      if (a.items.size() != b.items.size()) return false;
      for (std::size_t i = 0; i < a.items.size(); ++i)
        if (!eq(a.items[i], b.items[i])) return false;
      return true;
    }
    case ProtocolTerm::Kind::Foreach:
      return a.var == b.var && eq(a.lo, b.lo) && eq(a.hi, b.hi) && eq(a.body, b.body);
    case ProtocolTerm::Kind::Choice:
      return eq(a.cond, b.cond) && eq(a.then_branch, b.then_branch) &&
             eq(a.else_branch, b.else_branch);
    case ProtocolTerm::Kind::Val:
      return a.var == b.var && eq(a.payload, b.payload) && eq(a.cont, b.cont);
  }
  return false;
}

bool equal(const GlobalProtocol& a, const GlobalProtocol& b) {
  return a.name == b.name && eq(a.size_prop, b.size_prop) && eq(a.body, b.body);
}

// ---- alpha equivalence of datatypes ----

namespace {

using NameMap = std::map<std::string, std::string>;

bool alpha_index(const IndexTerm& a, const IndexTerm& b, const NameMap& ab, const NameMap& ba);

bool alpha_index_ptr(const IndexTermPtr& a, const IndexTermPtr& b, const NameMap& ab,
                     const NameMap& ba) {
  if (!a || !b) return !a && !b;
  return alpha_index(*a, *b, ab, ba);
}

bool alpha_index(const IndexTerm& a, const IndexTerm& b, const NameMap& ab, const NameMap& ba) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case IndexTerm::Kind::Var: {
      auto it = ab.find(a.name);
      if (it != ab.end()) return it->second == b.name;
      // a.name free: b.name must be free too and identical
      return !ba.count(b.name) && a.name == b.name;
    }
    case IndexTerm::Kind::Lit: return a.lit == b.lit;
    case IndexTerm::Kind::Length: return alpha_index_ptr(a.lhs, b.lhs, ab, ba);
    default:
      return alpha_index_ptr(a.lhs, b.lhs, ab, ba) && alpha_index_ptr(a.rhs, b.rhs, ab, ba);
  }
}

bool alpha_prop(const Prop& a, const Prop& b, const NameMap& ab, const NameMap& ba) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Prop::Kind::True: return true;
    case Prop::Kind::And:
    case Prop::Kind::Or:
      return alpha_prop(*a.left, *b.left, ab, ba) && alpha_prop(*a.right, *b.right, ab, ba);
    case Prop::Kind::Not: return alpha_prop(*a.left, *b.left, ab, ba);
    default:
      return alpha_index_ptr(a.lhs, b.lhs, ab, ba) && alpha_index_ptr(a.rhs, b.rhs, ab, ba);
  }
}

bool alpha_datatype(const Datatype& a, const Datatype& b, NameMap ab, NameMap ba) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Datatype::Kind::Integer:
    case Datatype::Kind::Float: return true;
    case Datatype::Kind::Array: {
      if (!alpha_datatype(*a.elem, *b.elem, ab, ba)) return false;
      if (!a.length || !b.length) return !a.length && !b.length;
      return alpha_index(*a.length, *b.length, ab, ba);
    }
    case Datatype::Kind::Refinement: {
      if (!alpha_datatype(*a.elem, *b.elem, ab, ba)) return false;
      ab[a.var] = b.var;
      ba[b.var] = a.var;
      return alpha_prop(*a.prop, *b.prop, ab, ba);
    }
  }
  return false;
}

}  // namespace

bool alpha_equivalent(const Datatype& a, const Datatype& b) {
  return alpha_datatype(a, b, {}, {});
}

// ---- free variables ----

void collect_free_vars(const IndexTerm& t, std::set<std::string>& out) {
  switch (t.kind) {
    case IndexTerm::Kind::Var: out.insert(t.name); break;
    case IndexTerm::Kind::Lit: break;
    default:
      if (t.lhs) collect_free_vars(*t.lhs, out);
      if (t.rhs) collect_free_vars(*t.rhs, out);
  }
}

void collect_free_vars(const Prop& p, std::set<std::string>& out) {
  if (p.lhs) collect_free_vars(*p.lhs, out);
  if (p.rhs) collect_free_vars(*p.rhs, out);
  if (p.left) collect_free_vars(*p.left, out);
  if (p.right) collect_free_vars(*p.right, out);
}

void collect_free_vars(const Datatype& d, std::set<std::string>& out) {
  switch (d.kind) {
    case Datatype::Kind::Integer:
    case Datatype::Kind::Float: break;
    case Datatype::Kind::Array:
      collect_free_vars(*d.elem, out);
      if (d.length) collect_free_vars(*d.length, out);
      break;
    case Datatype::Kind::Refinement: {
      collect_free_vars(*d.elem, out);
      std::set<std::string> inner;
      collect_free_vars(*d.prop, inner);
      inner.erase(d.var);
      out.insert(inner.begin(), inner.end());
      break;
    }
  }
}

void collect_free_vars(const ProtocolTerm& t, std::set<std::string>& out) {
  auto merge_minus = [&out](std::set<std::string> inner, const std::string& bound) {
    inner.erase(bound);
    out.insert(inner.begin(), inner.end());
  };
  switch (t.kind) {
    case ProtocolTerm::Kind::Skip: break;
    case ProtocolTerm::Kind::Message:
      collect_free_vars(*t.from, out);
      collect_free_vars(*t.to, out);
      collect_free_vars(*t.payload, out);
      break;
    case ProtocolTerm::Kind::Scatter:
    case ProtocolTerm::Kind::Gather:
    case ProtocolTerm::Kind::Reduce:
      collect_free_vars(*t.from, out);
      collect_free_vars(*t.payload, out);
      break;
    case ProtocolTerm::Kind::Broadcast: {
      collect_free_vars(*t.from, out);
      std::set<std::string> inner;
      collect_free_vars(*t.payload, inner);
      if (t.cont) collect_free_vars(*t.cont, inner);
      merge_minus(std::move(inner), t.var);
      break;
    }
    case ProtocolTerm::Kind::Allgather:
    case ProtocolTerm::Kind::Allreduce:
    case ProtocolTerm::Kind::Val: {
      std::set<std::string> inner;
      collect_free_vars(*t.payload, inner);
      if (t.cont) collect_free_vars(*t.cont, inner);
      merge_minus(std::move(inner), t.var);
      break;
    }
    case ProtocolTerm::Kind::Seq:
      for (const auto& item : t.items) collect_free_vars(*item, out);
      break;
    case ProtocolTerm::Kind::Foreach: {
      collect_free_vars(*t.lo, out);
      collect_free_vars(*t.hi, out);
      std::set<std::string> inner;
      collect_free_vars(*t.body, inner);
      merge_minus(std::move(inner), t.var);
      break;
    }
    case ProtocolTerm::Kind::Choice:
      collect_free_vars(*t.cond, out);
      collect_free_vars(*t.then_branch, out);
      collect_free_vars(*t.else_branch, out);
      break;
  }
}

bool mentions_var(const ProtocolTerm& t, const std::string& name) {
  std::set<std::string> free;
  collect_free_vars(t, free);
  return free.count(name) > 0;
}

}  // namespace partypes
