#include "partypes/program.hpp"

namespace partypes {

const char* to_string(CommKind kind) {
  switch (kind) {
    case CommKind::Send: return "send";
    case CommKind::Recv: return "recv";
    case CommKind::Broadcast: return "broadcast";
    case CommKind::Scatter: return "scatter";
    case CommKind::Gather: return "gather";
    case CommKind::Reduce: return "reduce";
    case CommKind::Allgather: return "allgather";
    case CommKind::Allreduce: return "allreduce";
    case CommKind::Apply: return "apply";
  }
  return "?";
}

ExprPtr Expr::lit_value(Value v, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Lit;
  e->lit = std::move(v);
  e->span = span;
  return e;
}

ExprPtr Expr::var(std::string name, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Var;
  e->name = std::move(name);
  e->span = span;
  return e;
}

ExprPtr Expr::array(std::vector<ExprPtr> items, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Array;
  e->items = std::move(items);
  e->span = span;
  return e;
}

ExprPtr Expr::unary(Kind op, ExprPtr operand, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = op;
  e->lhs = std::move(operand);
  e->span = span;
  return e;
}

ExprPtr Expr::binary(Kind op, ExprPtr l, ExprPtr r, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  e->span = span;
  return e;
}

StmtPtr Stmt::let(std::string name, ExprPtr expr, SourceSpan span) {
  auto s = std::make_shared<Stmt>();
  s->kind = Kind::Let;
  s->name = std::move(name);
  s->expr = std::move(expr);
  s->span = span;
  return s;
}

StmtPtr Stmt::assign(std::string name, ExprPtr expr, SourceSpan span) {
  auto s = std::make_shared<Stmt>();
  s->kind = Kind::Assign;
  s->name = std::move(name);
  s->expr = std::move(expr);
  s->span = span;
  return s;
}

StmtPtr Stmt::if_else(ExprPtr cond, std::vector<StmtPtr> body, std::vector<StmtPtr> else_body,
                      SourceSpan span) {
  auto s = std::make_shared<Stmt>();
  s->kind = Kind::If;
  s->expr = std::move(cond);
  s->body = std::move(body);
  s->else_body = std::move(else_body);
  s->span = span;
  return s;
}

StmtPtr Stmt::for_range(std::string var, ExprPtr lo, ExprPtr hi, std::vector<StmtPtr> body,
                        SourceSpan span) {
  auto s = std::make_shared<Stmt>();
  s->kind = Kind::For;
  s->name = std::move(var);
  s->lo = std::move(lo);
  s->hi = std::move(hi);
  s->body = std::move(body);
  s->span = span;
  return s;
}

StmtPtr Stmt::comm_stmt(CommKind kind, std::string bind, ExprPtr peer, ExprPtr value, ReduceOp op,
                        SourceSpan span) {
  auto s = std::make_shared<Stmt>();
  s->kind = Kind::Comm;
  s->comm = kind;
  s->bind = std::move(bind);
  s->peer = std::move(peer);
  s->value = std::move(value);
  s->op = op;
  s->span = span;
  return s;
}

}  // namespace partypes
