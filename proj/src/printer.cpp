#include "partypes/printer.hpp"

#include <sstream>

namespace partypes {

namespace {

int index_prec(IndexTerm::Kind k) {
  switch (k) {
    case IndexTerm::Kind::Add:
    case IndexTerm::Kind::Sub: return 1;
    case IndexTerm::Kind::Mul:
    case IndexTerm::Kind::Div:
    case IndexTerm::Kind::Mod: return 2;
    default: return 3;
  }
}

const char* index_op(IndexTerm::Kind k) {
  switch (k) {
    case IndexTerm::Kind::Add: return "+";
    case IndexTerm::Kind::Sub: return "-";
    case IndexTerm::Kind::Mul: return "*";
    case IndexTerm::Kind::Div: return "/";
    case IndexTerm::Kind::Mod: return "%";
    default: return "?";
  }
}

std::string lit_text(const Value& v) {
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_float()) return format_double(v.as_float());
  std::ostringstream os;
  os << "[";
  const auto& items = v.as_array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << ", ";
    os << lit_text(items[i]);
  }
  os << "]";
  return os.str();
}

void print_index(const IndexTerm& t, std::ostringstream& os, int parent_prec, bool right_side) {
  using K = IndexTerm::Kind;
  switch (t.kind) {
    case K::Var: os << t.name; return;
    case K::Lit: os << lit_text(t.lit); return;
    case K::Max:
    case K::Min: {
      os << (t.kind == K::Max ? "max(" : "min(");
      print_index(*t.lhs, os, 0, false);
      os << ", ";
      print_index(*t.rhs, os, 0, false);
      os << ")";
      return;
    }
    case K::Length:
      os << "length(";
      print_index(*t.lhs, os, 0, false);
      os << ")";
      return;
    case K::At: {
      // a negative literal base would reparse as -(lit[idx])
      bool neg_lit = t.lhs->kind == K::Lit && t.lhs->lit.is_int() && t.lhs->lit.as_int() < 0;
      if (neg_lit) os << "(";
      print_index(*t.lhs, os, 3, false);
      if (neg_lit) os << ")";
      os << "[";
      print_index(*t.rhs, os, 0, false);
      os << "]";
      return;
    }
    default: {
      int prec = index_prec(t.kind);
      bool parens = prec < parent_prec || (prec == parent_prec && right_side);
      if (parens) os << "(";
      print_index(*t.lhs, os, prec, false);
      os << " " << index_op(t.kind) << " ";
      print_index(*t.rhs, os, prec, true);
      if (parens) os << ")";
      return;
    }
  }
}

int prop_prec(Prop::Kind k) {
  switch (k) {
    case Prop::Kind::Or: return 1;
    case Prop::Kind::And: return 2;
    case Prop::Kind::Not: return 3;
    default: return 4;
  }
}

const char* cmp_op(Prop::Kind k) {
  switch (k) {
    case Prop::Kind::Leq: return "<=";
    case Prop::Kind::Lt: return "<";
    case Prop::Kind::Eq: return "=";
    case Prop::Kind::Geq: return ">=";
    case Prop::Kind::Gt: return ">";
    case Prop::Kind::Neq: return "!=";
    default: return "?";
  }
}

void print_prop(const Prop& p, std::ostringstream& os, int parent_prec) {
  using K = Prop::Kind;
  int prec = prop_prec(p.kind);
  bool parens = prec < parent_prec;
  switch (p.kind) {
    case K::True: os << "true"; return;
    case K::And:
    case K::Or:
      if (parens) os << "(";
      print_prop(*p.left, os, prec);
      os << (p.kind == K::And ? " and " : " or ");
      print_prop(*p.right, os, prec + 1);  // left-assoc
      if (parens) os << ")";
      return;
    case K::Not:
      os << "not ";
      print_prop(*p.left, os, prec + 1);
      return;
    default:
      print_index(*p.lhs, os, 0, false);
      os << " " << cmp_op(p.kind) << " ";
      print_index(*p.rhs, os, 0, false);
      return;
  }
}

bool is_var(const IndexTermPtr& t, const std::string& name) {
  return t && t->kind == IndexTerm::Kind::Var && t->name == name;
}

bool is_int_lit(const IndexTermPtr& t, std::int64_t n) {
  return t && t->kind == IndexTerm::Kind::Lit && t->lit.is_int() && t->lit.as_int() == n;
}

// Recognizes the exact desugarings of natural, positive and D[n] (binder
// name included) so printing is the inverse of parsing.
bool sugar_natural(const Datatype& d) {
  return d.kind == Datatype::Kind::Refinement && d.var == "x" &&
         d.elem->kind == Datatype::Kind::Integer && d.prop->kind == Prop::Kind::Geq &&
         is_var(d.prop->lhs, "x") && is_int_lit(d.prop->rhs, 0);
}

bool sugar_positive(const Datatype& d) {
  return d.kind == Datatype::Kind::Refinement && d.var == "x" &&
         d.elem->kind == Datatype::Kind::Integer && d.prop->kind == Prop::Kind::Geq &&
         is_var(d.prop->lhs, "x") && is_int_lit(d.prop->rhs, 1);
}

const IndexTerm* sugar_sized_array(const Datatype& d) {
  if (d.kind != Datatype::Kind::Refinement) return nullptr;
  if (d.elem->kind != Datatype::Kind::Array || d.elem->length) return nullptr;
  if (d.prop->kind != Prop::Kind::Eq) return nullptr;
  const auto& lhs = d.prop->lhs;
  if (!lhs || lhs->kind != IndexTerm::Kind::Length || !is_var(lhs->lhs, d.var)) return nullptr;
  std::set<std::string> free;
  collect_free_vars(*d.prop->rhs, free);
  if (free.count(d.var)) return nullptr;
  return d.prop->rhs.get();
}

void print_datatype(const Datatype& d, std::ostringstream& os) {
  if (sugar_natural(d)) {
    os << "natural";
    return;
  }
  if (sugar_positive(d)) {
    os << "positive";
    return;
  }
  if (const IndexTerm* n = sugar_sized_array(d)) {
    print_datatype(*d.elem->elem, os);
    os << "[";
    print_index(*n, os, 0, false);
    os << "]";
    return;
  }
  switch (d.kind) {
    case Datatype::Kind::Integer: os << "integer"; return;
    case Datatype::Kind::Float: os << "float"; return;
    case Datatype::Kind::Array:
      print_datatype(*d.elem, os);
      os << "[";
      if (d.length) print_index(*d.length, os, 0, false);
      os << "]";
      return;
    case Datatype::Kind::Refinement:
      os << "{" << d.var << ": ";
      print_datatype(*d.elem, os);
      os << " | ";
      print_prop(*d.prop, os, 0);
      os << "}";
      return;
  }
}

void indent_to(std::ostringstream& os, int indent) {
  for (int i = 0; i < indent; ++i) os << "  ";
}

void print_term(const ProtocolTerm& t, std::ostringstream& os, int indent);

void print_block(const ProtocolTerm& t, std::ostringstream& os, int indent) {
  os << "{\n";
  if (t.kind != ProtocolTerm::Kind::Skip) print_term(t, os, indent + 1);
  indent_to(os, indent);
  os << "}";
}

void print_term(const ProtocolTerm& t, std::ostringstream& os, int indent) {
  using K = ProtocolTerm::Kind;
  switch (t.kind) {
    case K::Skip: return;
    case K::Seq:
      for (const auto& item : t.items) print_term(*item, os, indent);
      return;
    case K::Message:
      indent_to(os, indent);
      os << "message ";
      print_index(*t.from, os, 0, false);
      os << ", ";
      print_index(*t.to, os, 0, false);
      os << " ";
      print_datatype(*t.payload, os);
      os << "\n";
      return;
    case K::Broadcast:
      indent_to(os, indent);
      os << "broadcast ";
      print_index(*t.from, os, 0, false);
      os << " " << t.var << ": ";
      print_datatype(*t.payload, os);
      os << "\n";
      if (t.cont) print_term(*t.cont, os, indent);
      return;
    case K::Scatter:
    case K::Gather:
      indent_to(os, indent);
      os << (t.kind == K::Scatter ? "scatter " : "gather ");
      print_index(*t.from, os, 0, false);
      os << " ";
      print_datatype(*t.payload, os);
      os << "\n";
      return;
    case K::Reduce:
      indent_to(os, indent);
      os << "reduce ";
      print_index(*t.from, os, 0, false);
      os << " " << to_string(t.op) << " ";
      print_datatype(*t.payload, os);
      os << "\n";
      return;
    case K::Allgather:
      indent_to(os, indent);
      os << "allgather " << t.var << ": ";
      print_datatype(*t.payload, os);
      os << "\n";
      if (t.cont) print_term(*t.cont, os, indent);
      return;
    case K::Allreduce:
      indent_to(os, indent);
      os << "allreduce " << to_string(t.op) << " " << t.var << ": ";
      print_datatype(*t.payload, os);
      os << "\n";
      if (t.cont) print_term(*t.cont, os, indent);
      return;
    case K::Val:
      indent_to(os, indent);
      os << "val " << t.var << ": ";
      print_datatype(*t.payload, os);
      os << "\n";
      if (t.cont) print_term(*t.cont, os, indent);
      return;
    case K::Foreach:
      indent_to(os, indent);
      os << "foreach " << t.var << ": ";
      print_index(*t.lo, os, 0, false);
      os << " .. ";
      print_index(*t.hi, os, 0, false);
      os << " ";
      print_block(*t.body, os, indent);
      os << "\n";
      return;
    case K::Choice:
      indent_to(os, indent);
      os << "if (";
      print_prop(*t.cond, os, 0);
      os << ") ";
      print_block(*t.then_branch, os, indent);
      if (t.else_branch && t.else_branch->kind != K::Skip) {
        os << " else ";
        print_block(*t.else_branch, os, indent);
      }
      os << "\n";
      return;
  }
}

}  // namespace

std::string pretty(const IndexTerm& t) {
  std::ostringstream os;
  print_index(t, os, 0, false);
  return os.str();
}

std::string pretty(const Prop& p) {
  std::ostringstream os;
  print_prop(p, os, 0);
  return os.str();
}

std::string pretty(const Datatype& d) {
  std::ostringstream os;
  print_datatype(d, os);
  return os.str();
}

std::string pretty(const ProtocolTerm& t, int indent) {
  std::ostringstream os;
  print_term(t, os, indent);
  return os.str();
}

std::string pretty_protocol(const GlobalProtocol& p) {
  std::ostringstream os;
  os << "protocol " << p.name << " (";
  print_prop(*p.size_prop, os, 0);
  os << ") ";
  print_block(*p.body, os, 0);
  os << "\n";
  return os.str();
}

// ---- program printing (debugging aid; grammar-compatible) ----

namespace {

int expr_prec(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Or: return 1;
    case Expr::Kind::And: return 2;
    case Expr::Kind::Not: return 3;
    case Expr::Kind::Lt:
    case Expr::Kind::Leq:
    case Expr::Kind::Gt:
    case Expr::Kind::Geq:
    case Expr::Kind::Eq:
    case Expr::Kind::Neq: return 4;
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 5;
    case Expr::Kind::Mul:
    case Expr::Kind::Div:
    case Expr::Kind::Mod: return 6;
    case Expr::Kind::Neg: return 7;
    default: return 8;
  }
}

const char* expr_op(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add: return "+";
    case Expr::Kind::Sub: return "-";
    case Expr::Kind::Mul: return "*";
    case Expr::Kind::Div: return "/";
    case Expr::Kind::Mod: return "%";
    case Expr::Kind::Lt: return "<";
    case Expr::Kind::Leq: return "<=";
    case Expr::Kind::Gt: return ">";
    case Expr::Kind::Geq: return ">=";
    case Expr::Kind::Eq: return "=";
    case Expr::Kind::Neq: return "!=";
    case Expr::Kind::And: return "and";
    case Expr::Kind::Or: return "or";
    default: return "?";
  }
}

void print_expr(const Expr& e, std::ostringstream& os, int parent_prec) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Lit: os << lit_text(e.lit); return;
    case K::Var: os << e.name; return;
    case K::Array: {
      os << "[";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) os << ", ";
        print_expr(*e.items[i], os, 0);
      }
      os << "]";
      return;
    }
    case K::Neg:
      os << "-";
      print_expr(*e.lhs, os, expr_prec(K::Neg));
      return;
    case K::Not:
      os << "not ";
      print_expr(*e.lhs, os, expr_prec(K::Not));
      return;
    case K::Max:
    case K::Min:
      os << (e.kind == K::Max ? "max(" : "min(");
      print_expr(*e.lhs, os, 0);
      os << ", ";
      print_expr(*e.rhs, os, 0);
      os << ")";
      return;
    case K::Length:
      os << "length(";
      print_expr(*e.lhs, os, 0);
      os << ")";
      return;
    case K::At:
      print_expr(*e.lhs, os, 8);
      os << "[";
      print_expr(*e.rhs, os, 0);
      os << "]";
      return;
    default: {
      int prec = expr_prec(e.kind);
      bool parens = prec < parent_prec;
      if (parens) os << "(";
      print_expr(*e.lhs, os, prec);
      os << " " << expr_op(e.kind) << " ";
      print_expr(*e.rhs, os, prec + 1);
      if (parens) os << ")";
      return;
    }
  }
}

void print_stmts(const std::vector<StmtPtr>& stmts, std::ostringstream& os, int indent);

void print_stmt(const Stmt& s, std::ostringstream& os, int indent) {
  indent_to(os, indent);
  switch (s.kind) {
    case Stmt::Kind::Let:
    case Stmt::Kind::Assign:
      if (s.kind == Stmt::Kind::Let) os << "let ";
      os << s.name << " = ";
      print_expr(*s.expr, os, 0);
      os << "\n";
      return;
    case Stmt::Kind::If:
      os << "if (";
      print_expr(*s.expr, os, 0);
      os << ") {\n";
      print_stmts(s.body, os, indent + 1);
      indent_to(os, indent);
      os << "}";
      if (!s.else_body.empty()) {
        os << " else {\n";
        print_stmts(s.else_body, os, indent + 1);
        indent_to(os, indent);
        os << "}";
      }
      os << "\n";
      return;
    case Stmt::Kind::For:
      os << "for " << s.name << " in ";
      print_expr(*s.lo, os, 0);
      os << " .. ";
      print_expr(*s.hi, os, 0);
      os << " {\n";
      print_stmts(s.body, os, indent + 1);
      indent_to(os, indent);
      os << "}\n";
      return;
    case Stmt::Kind::Comm: {
      if (!s.bind.empty()) os << "let " << s.bind << " = ";
      switch (s.comm) {
        case CommKind::Send:
          os << "send(";
          print_expr(*s.peer, os, 0);
          os << ", ";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
        case CommKind::Recv:
          os << "recv(";
          print_expr(*s.peer, os, 0);
          os << ")";
          break;
        case CommKind::Broadcast:
        case CommKind::Scatter:
        case CommKind::Gather:
          os << to_string(s.comm) << "(";
          print_expr(*s.peer, os, 0);
          os << ", ";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
        case CommKind::Reduce:
          os << "reduce(";
          print_expr(*s.peer, os, 0);
          os << ", " << to_string(s.op) << ", ";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
        case CommKind::Allgather:
          os << "allgather(";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
        case CommKind::Allreduce:
          os << "allreduce(" << to_string(s.op) << ", ";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
        case CommKind::Apply:
          os << "apply(";
          print_expr(*s.value, os, 0);
          os << ")";
          break;
      }
      os << "\n";
      return;
    }
  }
}

void print_stmts(const std::vector<StmtPtr>& stmts, std::ostringstream& os, int indent) {
  for (const auto& s : stmts) print_stmt(*s, os, indent);
}

}  // namespace

std::string pretty(const Expr& e) {
  std::ostringstream os;
  print_expr(e, os, 0);
  return os.str();
}

std::string pretty_program(const Program& p) {
  std::ostringstream os;
  for (const auto& ext : p.externs) {
    os << "extern " << ext.name << ": ";
    print_datatype(*ext.type, os);
    os << "\n";
  }
  if (!p.externs.empty()) os << "\n";
  print_stmts(p.body, os, 0);
  return os.str();
}

}  // namespace partypes
