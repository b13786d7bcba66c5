#pragma once

#include <memory>
#include <string>
#include <vector>

#include "partypes/ast.hpp"

namespace partypes {

struct Expr;
struct Stmt;
using ExprPtr = std::shared_ptr<const Expr>;
using StmtPtr = std::shared_ptr<const Stmt>;

/// Expressions of the SPMD mini-language. `rank` and `size` are ordinary
/// variables bound read-only by the interpreter. Comparisons and the logical
/// operators evaluate to int(1) / int(0).
struct Expr {
  enum class Kind {
    Lit,     // value
    Var,     // name
    Array,   // items
    Neg,     // lhs
    Not,     // lhs
    Add, Sub, Mul, Div, Mod,
    Lt, Leq, Gt, Geq, Eq, Neq,
    And, Or,
    Max, Min,  // lhs, rhs
    Length,    // lhs
    At,        // lhs[rhs]
  };

  Kind kind;
  Value lit;
  std::string name;
  std::vector<ExprPtr> items;
  ExprPtr lhs, rhs;
  SourceSpan span;

  static ExprPtr lit_value(Value v, SourceSpan span = {});
  static ExprPtr var(std::string name, SourceSpan span = {});
  static ExprPtr array(std::vector<ExprPtr> items, SourceSpan span = {});
  static ExprPtr unary(Kind op, ExprPtr operand, SourceSpan span = {});
  static ExprPtr binary(Kind op, ExprPtr l, ExprPtr r, SourceSpan span = {});
};

/// Communication statement kinds; Apply is the annotation that feeds a
/// protocol-level `val`, not a real exchange.
enum class CommKind { Send, Recv, Broadcast, Scatter, Gather, Reduce, Allgather, Allreduce, Apply };

const char* to_string(CommKind kind);

struct Stmt {
  enum class Kind { Let, Assign, If, For, Comm };

  Kind kind;
  std::string name;  // Let/Assign target, For loop variable
  ExprPtr expr;      // Let/Assign value, If condition
  ExprPtr lo, hi;    // For bounds (inclusive)
  std::vector<StmtPtr> body, else_body;

  // Comm fields
  CommKind comm = CommKind::Send;
  std::string bind;   // result binder ("" for send/apply)
  ExprPtr peer;       // send target, recv source, collective root
  ExprPtr value;      // sent value / contribution / root payload
  ReduceOp op = ReduceOp::Sum;

  SourceSpan span;

  static StmtPtr let(std::string name, ExprPtr expr, SourceSpan span = {});
  static StmtPtr assign(std::string name, ExprPtr expr, SourceSpan span = {});
  static StmtPtr if_else(ExprPtr cond, std::vector<StmtPtr> body, std::vector<StmtPtr> else_body,
                         SourceSpan span = {});
  static StmtPtr for_range(std::string var, ExprPtr lo, ExprPtr hi, std::vector<StmtPtr> body,
                           SourceSpan span = {});
  static StmtPtr comm_stmt(CommKind kind, std::string bind, ExprPtr peer, ExprPtr value,
                           ReduceOp op = ReduceOp::Sum, SourceSpan span = {});
};

struct ExternDecl {
  std::string name;
  DatatypePtr type;
  SourceSpan span;
};

struct Program {
  std::vector<ExternDecl> externs;
  std::vector<StmtPtr> body;
  SourceSpan span;
};

}  // namespace partypes
