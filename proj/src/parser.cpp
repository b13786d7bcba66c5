#include "partypes/parser.hpp"

#include <charconv>

#include "partypes/eval.hpp"
#include <map>
#include <set>

namespace partypes {

namespace {

enum class Tok {
  End, Newline, Ident, Int, Float,
  // keywords
  KwProtocol, KwMessage, KwBroadcast, KwScatter, KwGather, KwReduce, KwAllgather, KwAllreduce,
  KwVal, KwForeach, KwIf, KwElse, KwInteger, KwFloat, KwNatural, KwPositive, KwTrue, KwAnd, KwOr,
  KwNot, KwMax, KwMin, KwSum, KwLength, KwSize, KwRank, KwLet, KwFor, KwIn, KwSend, KwRecv,
  KwApply, KwExtern,
  // punctuation
  LParen, RParen, LBrace, RBrace, LBracket, RBracket, Comma, Colon, Pipe,
  Plus, Minus, Star, Slash, Percent, Eq, Lt, Leq, Gt, Geq, Neq, DotDot,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t int_value = 0;
  double float_value = 0.0;
  SourceSpan span;
};

const std::map<std::string, Tok>& keyword_table() {
  static const std::map<std::string, Tok> table = {
      {"protocol", Tok::KwProtocol}, {"message", Tok::KwMessage}, {"broadcast", Tok::KwBroadcast},
      {"scatter", Tok::KwScatter},   {"gather", Tok::KwGather},   {"reduce", Tok::KwReduce},
      {"allgather", Tok::KwAllgather}, {"allreduce", Tok::KwAllreduce}, {"val", Tok::KwVal},
      {"foreach", Tok::KwForeach},   {"if", Tok::KwIf},           {"else", Tok::KwElse},
      {"integer", Tok::KwInteger},   {"float", Tok::KwFloat},     {"natural", Tok::KwNatural},
      {"positive", Tok::KwPositive}, {"true", Tok::KwTrue},       {"and", Tok::KwAnd},
      {"or", Tok::KwOr},             {"not", Tok::KwNot},         {"max", Tok::KwMax},
      {"min", Tok::KwMin},           {"sum", Tok::KwSum},         {"length", Tok::KwLength},
      {"size", Tok::KwSize},         {"rank", Tok::KwRank},       {"let", Tok::KwLet},
      {"for", Tok::KwFor},           {"in", Tok::KwIn},           {"send", Tok::KwSend},
      {"recv", Tok::KwRecv},         {"apply", Tok::KwApply},     {"extern", Tok::KwExtern},
  };
  return table;
}

struct ParseAbort {};

class Lexer {
 public:
  Lexer(const std::string& text, std::string filename, std::vector<Diagnostic>& diags)
      : text_(text), file_(std::move(filename)), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::End) break;
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, SourceSpan span) {
    diags_.push_back({Severity::Error, "lex-error", msg, span});
    throw ParseAbort{};
  }

  SourceSpan here() const { return SourceSpan{file_, line_, col_, line_, col_}; }

  char peek(std::size_t off = 0) const {
    return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
  }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  Token make(Tok kind, SourceSpan start, std::string text = "") {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.span = start;
    t.span.end_line = line_;
    t.span.end_col = col_ > 1 ? col_ - 1 : 1;
    return t;
  }

  Token next() {
    // skip spaces, tabs and comments; newlines are significant outside ()/[]
    while (pos_ < text_.size()) {
      char c = peek();
      if (c == ' ' || c == '\t') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && peek() != '\n' && peek() != '\r') advance();
      } else if (c == '\r' || c == '\n') {
        SourceSpan s = here();
        if (c == '\r') advance();
        if (peek() == '\n') advance();
        if (group_depth_ > 0) continue;
        return make(Tok::Newline, s);
      } else {
        break;
      }
    }
    if (pos_ >= text_.size()) return make(Tok::End, here());

    SourceSpan start = here();
    char c = peek();

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
        word.push_back(advance());
      auto it = keyword_table().find(word);
      if (it != keyword_table().end()) return make(it->second, start, word);
      return make(Tok::Ident, start, word);
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) digits.push_back(advance());
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        digits.push_back(advance());
        while (std::isdigit(static_cast<unsigned char>(peek()))) digits.push_back(advance());
        Token t = make(Tok::Float, start, digits);
        t.float_value = std::stod(digits);
        return t;
      }
      if (peek() == '.' && peek(1) != '.')
        fail("malformed number: expected digits after decimal point", start);
      Token t = make(Tok::Int, start, digits);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.int_value);
      if (ec != std::errc()) fail("integer literal out of range: " + digits, start);
      return t;
    }

    advance();
    switch (c) {
      case '(': ++group_depth_; return make(Tok::LParen, start, "(");
      case ')': if (group_depth_ > 0) --group_depth_; return make(Tok::RParen, start, ")");
      case '[': ++group_depth_; return make(Tok::LBracket, start, "[");
      case ']': if (group_depth_ > 0) --group_depth_; return make(Tok::RBracket, start, "]");
      case '{': return make(Tok::LBrace, start, "{");
      case '}': return make(Tok::RBrace, start, "}");
      case ',': return make(Tok::Comma, start, ",");
      case ':': return make(Tok::Colon, start, ":");
      case '|': return make(Tok::Pipe, start, "|");
      case '+': return make(Tok::Plus, start, "+");
      case '-': return make(Tok::Minus, start, "-");
      case '*': return make(Tok::Star, start, "*");
      case '/': return make(Tok::Slash, start, "/");
      case '%': return make(Tok::Percent, start, "%");
      case '=': return make(Tok::Eq, start, "=");
      case '<':
        if (peek() == '=') { advance(); return make(Tok::Leq, start, "<="); }
        return make(Tok::Lt, start, "<");
      case '>':
        if (peek() == '=') { advance(); return make(Tok::Geq, start, ">="); }
        return make(Tok::Gt, start, ">");
      case '!':
        if (peek() == '=') { advance(); return make(Tok::Neq, start, "!="); }
        fail("unexpected '!'", start);
      case '.':
        if (peek() == '.') { advance(); return make(Tok::DotDot, start, ".."); }
        fail("unexpected '.'", start);
      default: break;
    }
    fail(std::string("unexpected character '") + c + "'", start);
  }

  const std::string& text_;
  std::string file_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  int group_depth_ = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), diags_(diags) {}

 protected:
  const Token& peek(std::size_t off = 0) const {
    std::size_t i = pos_ + off;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }

  const Token& take() {
    const Token& t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool at(Tok kind) const { return peek().kind == kind; }

  bool accept(Tok kind) {
    if (!at(kind)) return false;
    take();
    return true;
  }

  const Token& expect(Tok kind, const std::string& what) {
    if (!at(kind)) fail("syntax-error", "expected " + what + booster(), peek().span);
    return take();
  }

  std::string booster() const {
    const Token& t = peek();
    if (t.kind == Tok::End) return ", found end of input";
    if (t.kind == Tok::Newline) return ", found end of line";
    return ", found '" + t.text + "'";
  }

  [[noreturn]] void fail(const std::string& code, const std::string& msg, SourceSpan span) {
    diags_.push_back({Severity::Error, code, msg, span});
    throw ParseAbort{};
  }

  void skip_newlines() {
    while (at(Tok::Newline)) take();
  }

  // --- scope handling ---
  void push_scope() { scopes_.emplace_back(); }
  void pop_scope() { scopes_.pop_back(); }

  void declare(const std::string& name) { scopes_.back().insert(name); }

  bool in_scope(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->count(name)) return true;
    return false;
  }

  std::string expect_binder_name() {
    if (at(Tok::KwSize) || at(Tok::KwRank))
      fail("reserved-rebind", "cannot bind reserved name '" + peek().text + "'", peek().span);
    const Token& t = expect(Tok::Ident, "an identifier");
    return t.text;
  }

  struct Mark {
    std::size_t pos;
    std::size_t diags;
  };
  Mark mark() const { return {pos_, diags_.size()}; }
  void rewind(Mark m) {
    pos_ = m.pos;
    diags_.resize(m.diags);
  }

  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  std::vector<std::set<std::string>> scopes_;
};

SourceSpan join(SourceSpan a, const SourceSpan& b) {
  a.end_line = b.end_line;
  a.end_col = b.end_col;
  return a;
}

// ---------------------------------------------------------------------------
// Protocol parser
// ---------------------------------------------------------------------------

class ProtocolParser : public Parser {
 public:
  using Parser::Parser;

  GlobalProtocol run() {
    push_scope();
    declare("size");
    skip_newlines();
    SourceSpan start = peek().span;
    expect(Tok::KwProtocol, "'protocol'");
    std::string name = expect(Tok::Ident, "a protocol name").text;
    expect(Tok::LParen, "'('");
    PropPtr size_prop = parse_prop();
    expect(Tok::RParen, "')'");
    TermPtr body = parse_block();
    skip_newlines();
    if (!at(Tok::End)) fail("syntax-error", "unexpected input after protocol" + booster(), peek().span);
    return GlobalProtocol{name, size_prop, body, join(start, peek().span)};
  }

  // Exposed so datatype syntax can be reused by the program parser.
  DatatypePtr parse_datatype() {
    SourceSpan start = peek().span;
    DatatypePtr d = parse_datatype_base();
    while (at(Tok::LBracket)) {
      take();
      if (accept(Tok::RBracket)) {
        d = Datatype::array(d, nullptr, join(start, peek().span));
        continue;
      }
      IndexTermPtr n = parse_index();
      expect(Tok::RBracket, "']'");
      d = Datatype::sized_array(d, n, join(start, peek().span));
    }
    return d;
  }

  PropPtr parse_prop() { return parse_or(); }

  IndexTermPtr parse_index() { return parse_addsub(); }

 protected:
  ReduceOp parse_reduce_op() {
    if (accept(Tok::KwMax)) return ReduceOp::Max;
    if (accept(Tok::KwMin)) return ReduceOp::Min;
    if (accept(Tok::KwSum)) return ReduceOp::Sum;
    fail("syntax-error", "expected a reduction operator (max, min, sum)" + booster(), peek().span);
  }

 private:
  DatatypePtr parse_datatype_base() {
    SourceSpan span = peek().span;
    if (accept(Tok::KwInteger)) return Datatype::integer(span);
    if (accept(Tok::KwFloat)) return Datatype::real(span);
    if (accept(Tok::KwNatural)) return Datatype::natural(span);
    if (accept(Tok::KwPositive)) return Datatype::positive(span);
    if (accept(Tok::LBrace)) {
      std::string var = expect_binder_name();
      expect(Tok::Colon, "':'");
      DatatypePtr base = parse_datatype();
      expect(Tok::Pipe, "'|'");
      push_scope();
      declare(var);
      PropPtr prop = parse_prop();
      pop_scope();
      expect(Tok::RBrace, "'}'");
      return Datatype::refinement(var, base, prop, join(span, peek().span));
    }
    fail("syntax-error", "expected a datatype" + booster(), peek().span);
  }

  PropPtr parse_or() {
    PropPtr p = parse_and();
    while (at(Tok::KwOr)) {
      SourceSpan span = take().span;
      p = Prop::disj(p, parse_and(), span);
    }
    return p;
  }

  PropPtr parse_and() {
    PropPtr p = parse_not();
    while (at(Tok::KwAnd)) {
      SourceSpan span = take().span;
      p = Prop::conj(p, parse_not(), span);
    }
    return p;
  }

  PropPtr parse_not() {
    if (at(Tok::KwNot)) {
      SourceSpan span = take().span;
      return Prop::negate(parse_not(), span);
    }
    return parse_prop_atom();
  }

  PropPtr parse_prop_atom() {
    SourceSpan span = peek().span;
    if (accept(Tok::KwTrue)) return Prop::truth(span);
    if (at(Tok::Ident) && peek(1).kind == Tok::LParen)
      fail("uninterpreted-predicate",
           "uninterpreted predicates are not supported in propositions", span);

    // A '(' may open a parenthesized proposition or an index term; try the
    // comparison reading first and fall back.
    Mark m = mark();
    try {
      IndexTermPtr lhs = parse_index();
      Prop::Kind op = parse_cmp_op();
      IndexTermPtr rhs = parse_index();
      return Prop::compare(op, lhs, rhs, span);
    } catch (const ParseAbort&) {
      rewind(m);
    }
    if (accept(Tok::LParen)) {
      PropPtr p = parse_prop();
      expect(Tok::RParen, "')'");
      return p;
    }
    fail("syntax-error", "expected a proposition" + booster(), span);
  }

  Prop::Kind parse_cmp_op() {
    switch (peek().kind) {
      case Tok::Leq: take(); return Prop::Kind::Leq;
      case Tok::Lt: take(); return Prop::Kind::Lt;
      case Tok::Eq: take(); return Prop::Kind::Eq;
      case Tok::Geq: take(); return Prop::Kind::Geq;
      case Tok::Gt: take(); return Prop::Kind::Gt;
      case Tok::Neq: take(); return Prop::Kind::Neq;
      default: fail("syntax-error", "expected a comparison operator" + booster(), peek().span);
    }
  }

  IndexTermPtr parse_addsub() {
    IndexTermPtr t = parse_muldiv();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      auto op = take().kind == Tok::Plus ? IndexTerm::Kind::Add : IndexTerm::Kind::Sub;
      t = IndexTerm::binary(op, t, parse_muldiv(), t->span);
    }
    return t;
  }

  IndexTermPtr parse_muldiv() {
    IndexTermPtr t = parse_unary();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      IndexTerm::Kind op = IndexTerm::Kind::Mul;
      if (peek().kind == Tok::Slash) op = IndexTerm::Kind::Div;
      if (peek().kind == Tok::Percent) op = IndexTerm::Kind::Mod;
      take();
      t = IndexTerm::binary(op, t, parse_unary(), t->span);
    }
    return t;
  }

  IndexTermPtr parse_unary() {
    if (at(Tok::Minus)) {
      SourceSpan span = take().span;
      IndexTermPtr operand = parse_unary();
      if (operand->kind == IndexTerm::Kind::Lit && operand->lit.is_int())
        return IndexTerm::int_lit(-operand->lit.as_int(), span);
      return IndexTerm::binary(IndexTerm::Kind::Sub, IndexTerm::int_lit(0, span), operand, span);
    }
    return parse_postfix();
  }

  IndexTermPtr parse_postfix() {
    IndexTermPtr t = parse_primary();
    while (at(Tok::LBracket)) {
      SourceSpan span = take().span;
      IndexTermPtr idx = parse_index();
      expect(Tok::RBracket, "']'");
      t = IndexTerm::at(t, idx, span);
    }
    return t;
  }

  IndexTermPtr parse_primary() {
    SourceSpan span = peek().span;
    switch (peek().kind) {
      case Tok::Int: return IndexTerm::int_lit(take().int_value, span);
      case Tok::KwSize: take(); return IndexTerm::var("size", span);
      case Tok::KwRank:
        fail("rank-in-protocol", "'rank' is a program concept and cannot appear in protocols",
             span);
      case Tok::Ident: {
        std::string name = take().text;
        if (!in_scope(name)) fail("unbound-variable", "unbound variable " + name, span);
        return IndexTerm::var(name, span);
      }
      case Tok::KwMax:
      case Tok::KwMin: {
        auto op = take().kind == Tok::KwMax ? IndexTerm::Kind::Max : IndexTerm::Kind::Min;
        expect(Tok::LParen, "'('");
        IndexTermPtr a = parse_index();
        expect(Tok::Comma, "','");
        IndexTermPtr b = parse_index();
        expect(Tok::RParen, "')'");
        return IndexTerm::binary(op, a, b, span);
      }
      case Tok::KwLength: {
        take();
        expect(Tok::LParen, "'('");
        IndexTermPtr a = parse_index();
        expect(Tok::RParen, "')'");
        return IndexTerm::length(a, span);
      }
      case Tok::LParen: {
        take();
        IndexTermPtr t = parse_index();
        expect(Tok::RParen, "')'");
        return t;
      }
      default: fail("syntax-error", "expected an index term" + booster(), span);
    }
  }

  TermPtr parse_block() {
    SourceSpan span = peek().span;
    expect(Tok::LBrace, "'{'");
    std::vector<TermPtr> items = parse_items();
    expect(Tok::RBrace, "'}'");
    return normalize(ProtocolTerm::seq(std::move(items), span));
  }

  std::vector<TermPtr> parse_items() {
    std::vector<TermPtr> items;
    while (true) {
      skip_newlines();
      if (at(Tok::RBrace) || at(Tok::End)) return items;
      SourceSpan span = peek().span;
      switch (peek().kind) {
        case Tok::KwMessage: {
          take();
          IndexTermPtr from = parse_index();
          expect(Tok::Comma, "','");
          IndexTermPtr to = parse_index();
          DatatypePtr d = parse_datatype();
          items.push_back(ProtocolTerm::message(from, to, d, span));
          break;
        }
        case Tok::KwScatter:
        case Tok::KwGather: {
          bool is_scatter = take().kind == Tok::KwScatter;
          IndexTermPtr root = parse_index();
          DatatypePtr d = parse_datatype();
          items.push_back(is_scatter ? ProtocolTerm::scatter(root, d, span)
                                     : ProtocolTerm::gather(root, d, span));
          break;
        }
        case Tok::KwReduce: {
          take();
          IndexTermPtr root = parse_index();
          ReduceOp op = parse_reduce_op();
          DatatypePtr d = parse_datatype();
          items.push_back(ProtocolTerm::reduce(root, op, d, span));
          break;
        }
        case Tok::KwBroadcast: {
          take();
          IndexTermPtr root = parse_index();
          std::string var = expect_binder_name();
          expect(Tok::Colon, "':'");
          push_scope();
          declare(var);
          DatatypePtr d = parse_datatype();
          TermPtr cont = normalize(ProtocolTerm::seq(parse_items(), span));
          pop_scope();
          items.push_back(ProtocolTerm::broadcast(root, var, d, cont, span));
          return items;
        }
        case Tok::KwAllgather: {
          take();
          std::string var = expect_binder_name();
          expect(Tok::Colon, "':'");
          push_scope();
          declare(var);
          DatatypePtr d = parse_datatype();
          TermPtr cont = normalize(ProtocolTerm::seq(parse_items(), span));
          pop_scope();
          items.push_back(ProtocolTerm::allgather(var, d, cont, span));
          return items;
        }
        case Tok::KwAllreduce: {
          take();
          ReduceOp op = parse_reduce_op();
          std::string var = expect_binder_name();
          expect(Tok::Colon, "':'");
          push_scope();
          declare(var);
          DatatypePtr d = parse_datatype();
          TermPtr cont = normalize(ProtocolTerm::seq(parse_items(), span));
          pop_scope();
          items.push_back(ProtocolTerm::allreduce(op, var, d, cont, span));
          return items;
        }
        case Tok::KwVal: {
          take();
          std::string var = expect_binder_name();
          expect(Tok::Colon, "':'");
          push_scope();
          declare(var);
          DatatypePtr d = parse_datatype();
          TermPtr cont = normalize(ProtocolTerm::seq(parse_items(), span));
          pop_scope();
          items.push_back(ProtocolTerm::val(var, d, cont, span));
          return items;
        }
        case Tok::KwForeach: {
          take();
          std::string var = expect_binder_name();
          expect(Tok::Colon, "':'");
          IndexTermPtr lo = parse_index();
          expect(Tok::DotDot, "'..'");
          IndexTermPtr hi = parse_index();
          push_scope();
          declare(var);
          TermPtr body = parse_block();
          pop_scope();
          items.push_back(ProtocolTerm::foreach(var, lo, hi, body, span));
          break;
        }
        case Tok::KwIf: {
          take();
          expect(Tok::LParen, "'('");
          PropPtr cond = parse_prop();
          expect(Tok::RParen, "')'");
          TermPtr then_branch = parse_block();
          TermPtr else_branch = ProtocolTerm::skip(span);
          skip_newlines_before_else();
          if (accept(Tok::KwElse)) else_branch = parse_block();
          items.push_back(ProtocolTerm::choice(cond, then_branch, else_branch, span));
          break;
        }
        default:
          fail("syntax-error", "expected a protocol item" + booster(), span);
      }
    }
  }

  // `} else` may sit on the next line
  void skip_newlines_before_else() {
    Mark m = mark();
    skip_newlines();
    if (!at(Tok::KwElse)) rewind(m);
  }
};

// ---------------------------------------------------------------------------
// Program parser
// ---------------------------------------------------------------------------

class ProgramParser : public ProtocolParser {
 public:
  ProgramParser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : ProtocolParser(std::move(tokens), diags) {}

  Program run_program() {
    Program prog;
    prog.span = peek().span;
    push_scope();
    declare_immutable("rank");
    declare_immutable("size");
    skip_newlines();
    while (at(Tok::KwExtern)) {
      SourceSpan span = take().span;
      std::string name = expect_binder_name();
      expect(Tok::Colon, "':'");
      // Shares the protocol datatype grammar; extern refinements may mention
      // size and earlier externs through the inherited scope.
      DatatypePtr type = parse_datatype();
      if (declared_here(name))
        fail("duplicate-binding", "extern " + name + " is already declared", span);
      declare_immutable(name);
      prog.externs.push_back({name, type, span});
      skip_newlines();
    }
    prog.body = parse_stmts_until(Tok::End);
    if (!at(Tok::End)) fail("syntax-error", "unexpected input" + booster(), peek().span);
    return prog;
  }

 private:
  struct Binding {
    bool mutable_slot;
  };

  void declare_immutable(const std::string& name) {
    declare(name);
    vars_.back()[name] = {false};
  }
  void declare_mutable(const std::string& name) {
    declare(name);
    vars_.back()[name] = {true};
  }

  bool declared_here(const std::string& name) const { return vars_.back().count(name) > 0; }

  const Binding* find(const std::string& name) const {
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it) {
      auto hit = it->find(name);
      if (hit != it->end()) return &hit->second;
    }
    return nullptr;
  }

  void push_scope() {
    Parser::push_scope();
    vars_.emplace_back();
  }
  void pop_scope() {
    Parser::pop_scope();
    vars_.pop_back();
  }

  std::vector<StmtPtr> parse_stmts_until(Tok terminator) {
    std::vector<StmtPtr> out;
    while (true) {
      skip_newlines();
      if (at(terminator) || at(Tok::End)) return out;
      out.push_back(parse_stmt());
    }
  }

  std::vector<StmtPtr> parse_braced_block() {
    expect(Tok::LBrace, "'{'");
    push_scope();
    std::vector<StmtPtr> body = parse_stmts_until(Tok::RBrace);
    pop_scope();
    expect(Tok::RBrace, "'}'");
    return body;
  }

  StmtPtr parse_stmt() {
    SourceSpan span = peek().span;
    switch (peek().kind) {
      case Tok::KwLet: return parse_let();
      case Tok::Ident: {
        std::string name = take().text;
        const Binding* b = find(name);
        if (!b) fail("assign-undeclared", "assignment to undeclared variable " + name, span);
        if (!b->mutable_slot)
          fail("assign-immutable", "cannot assign to immutable variable " + name, span);
        expect(Tok::Eq, "'='");
        ExprPtr e = parse_expr();
        return Stmt::assign(name, e, span);
      }
      case Tok::KwIf: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr cond = parse_expr();
        expect(Tok::RParen, "')'");
        std::vector<StmtPtr> body = parse_braced_block();
        std::vector<StmtPtr> else_body;
        Mark m = mark();
        skip_newlines();
        if (accept(Tok::KwElse)) {
          else_body = parse_braced_block();
        } else {
          rewind(m);
        }
        return Stmt::if_else(cond, std::move(body), std::move(else_body), span);
      }
      case Tok::KwFor: {
        take();
        std::string var = expect_binder_name();
        expect(Tok::KwIn, "'in'");
        ExprPtr lo = parse_expr();
        expect(Tok::DotDot, "'..'");
        ExprPtr hi = parse_expr();
        expect(Tok::LBrace, "'{'");
        push_scope();
        declare_immutable(var);
        std::vector<StmtPtr> body = parse_stmts_until(Tok::RBrace);
        pop_scope();
        expect(Tok::RBrace, "'}'");
        return Stmt::for_range(var, lo, hi, std::move(body), span);
      }
      case Tok::KwSend: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr to = parse_expr();
        expect(Tok::Comma, "','");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        return Stmt::comm_stmt(CommKind::Send, "", to, value, ReduceOp::Sum, span);
      }
      case Tok::KwApply: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        return Stmt::comm_stmt(CommKind::Apply, "", nullptr, value, ReduceOp::Sum, span);
      }
      case Tok::KwExtern:
        fail("extern-position", "extern declarations must precede all statements", span);
      case Tok::KwRank:
      case Tok::KwSize:
        if (peek(1).kind == Tok::Eq)
          fail("assign-immutable", "cannot assign to immutable variable " + peek().text, span);
        fail("syntax-error", "expected a statement" + booster(), span);
      default:
        fail("syntax-error", "expected a statement" + booster(), span);
    }
  }

  StmtPtr parse_let() {
    SourceSpan span = take().span;  // 'let'
    std::string name = expect_binder_name();
    expect(Tok::Eq, "'='");

    StmtPtr stmt;
    switch (peek().kind) {
      case Tok::KwRecv: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr from = parse_expr();
        expect(Tok::RParen, "')'");
        stmt = Stmt::comm_stmt(CommKind::Recv, name, from, nullptr, ReduceOp::Sum, span);
        break;
      }
      case Tok::KwBroadcast:
      case Tok::KwScatter:
      case Tok::KwGather: {
        CommKind kind = CommKind::Broadcast;
        if (peek().kind == Tok::KwScatter) kind = CommKind::Scatter;
        if (peek().kind == Tok::KwGather) kind = CommKind::Gather;
        take();
        expect(Tok::LParen, "'('");
        ExprPtr root = parse_expr();
        expect(Tok::Comma, "','");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        stmt = Stmt::comm_stmt(kind, name, root, value, ReduceOp::Sum, span);
        break;
      }
      case Tok::KwReduce: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr root = parse_expr();
        expect(Tok::Comma, "','");
        ReduceOp op = parse_reduce_op();
        expect(Tok::Comma, "','");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        stmt = Stmt::comm_stmt(CommKind::Reduce, name, root, value, op, span);
        break;
      }
      case Tok::KwAllgather: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        stmt = Stmt::comm_stmt(CommKind::Allgather, name, nullptr, value, ReduceOp::Sum, span);
        break;
      }
      case Tok::KwAllreduce: {
        take();
        expect(Tok::LParen, "'('");
        ReduceOp op = parse_reduce_op();
        expect(Tok::Comma, "','");
        ExprPtr value = parse_expr();
        expect(Tok::RParen, "')'");
        stmt = Stmt::comm_stmt(CommKind::Allreduce, name, nullptr, value, op, span);
        break;
      }
      default: {
        ExprPtr e = parse_expr();
        stmt = Stmt::let(name, e, span);
        break;
      }
    }
    if (declared_here(name))
      fail("duplicate-binding", "variable " + name + " is already declared in this scope", span);
    declare_mutable(name);
    return stmt;
  }

  ExprPtr parse_expr() { return parse_expr_or(); }

  ExprPtr parse_expr_or() {
    ExprPtr e = parse_expr_and();
    while (at(Tok::KwOr)) {
      SourceSpan span = take().span;
      e = Expr::binary(Expr::Kind::Or, e, parse_expr_and(), span);
    }
    return e;
  }

  ExprPtr parse_expr_and() {
    ExprPtr e = parse_expr_not();
    while (at(Tok::KwAnd)) {
      SourceSpan span = take().span;
      e = Expr::binary(Expr::Kind::And, e, parse_expr_not(), span);
    }
    return e;
  }

  ExprPtr parse_expr_not() {
    if (at(Tok::KwNot)) {
      SourceSpan span = take().span;
      return Expr::unary(Expr::Kind::Not, parse_expr_not(), span);
    }
    return parse_cmp();
  }

  ExprPtr parse_cmp() {
    ExprPtr e = parse_expr_addsub();
    Expr::Kind op;
    switch (peek().kind) {
      case Tok::Lt: op = Expr::Kind::Lt; break;
      case Tok::Leq: op = Expr::Kind::Leq; break;
      case Tok::Gt: op = Expr::Kind::Gt; break;
      case Tok::Geq: op = Expr::Kind::Geq; break;
      case Tok::Eq: op = Expr::Kind::Eq; break;
      case Tok::Neq: op = Expr::Kind::Neq; break;
      default: return e;
    }
    SourceSpan span = take().span;
    return Expr::binary(op, e, parse_expr_addsub(), span);
  }

  ExprPtr parse_expr_addsub() {
    ExprPtr e = parse_expr_muldiv();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      auto op = take().kind == Tok::Plus ? Expr::Kind::Add : Expr::Kind::Sub;
      e = Expr::binary(op, e, parse_expr_muldiv(), e->span);
    }
    return e;
  }

  ExprPtr parse_expr_muldiv() {
    ExprPtr e = parse_expr_unary();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      Expr::Kind op = Expr::Kind::Mul;
      if (peek().kind == Tok::Slash) op = Expr::Kind::Div;
      if (peek().kind == Tok::Percent) op = Expr::Kind::Mod;
      take();
      e = Expr::binary(op, e, parse_expr_unary(), e->span);
    }
    return e;
  }

  ExprPtr parse_expr_unary() {
    if (at(Tok::Minus)) {
      SourceSpan span = take().span;
      ExprPtr inner = parse_expr_unary();
      if (inner->kind == Expr::Kind::Lit && inner->lit.is_int())
        return Expr::lit_value(Value::of_int(-inner->lit.as_int()), span);
      if (inner->kind == Expr::Kind::Lit && inner->lit.is_float())
        return Expr::lit_value(Value::of_float(-inner->lit.as_float()), span);
      return Expr::unary(Expr::Kind::Neg, inner, span);
    }
    return parse_expr_postfix();
  }

  ExprPtr parse_expr_postfix() {
    ExprPtr e = parse_expr_primary();
    while (at(Tok::LBracket)) {
      SourceSpan span = take().span;
      ExprPtr idx = parse_expr();
      expect(Tok::RBracket, "']'");
      e = Expr::binary(Expr::Kind::At, e, idx, span);
    }
    return e;
  }

  ExprPtr parse_expr_primary() {
    SourceSpan span = peek().span;
    switch (peek().kind) {
      case Tok::Int: return Expr::lit_value(Value::of_int(take().int_value), span);
      case Tok::Float: return Expr::lit_value(Value::of_float(take().float_value), span);
      case Tok::KwRank: take(); return Expr::var("rank", span);
      case Tok::KwSize: take(); return Expr::var("size", span);
      case Tok::Ident: {
        std::string name = take().text;
        if (!find(name)) fail("unbound-variable", "unbound variable " + name, span);
        return Expr::var(name, span);
      }
      case Tok::KwMax:
      case Tok::KwMin: {
        auto op = take().kind == Tok::KwMax ? Expr::Kind::Max : Expr::Kind::Min;
        expect(Tok::LParen, "'('");
        ExprPtr a = parse_expr();
        expect(Tok::Comma, "','");
        ExprPtr b = parse_expr();
        expect(Tok::RParen, "')'");
        return Expr::binary(op, a, b, span);
      }
      case Tok::KwLength: {
        take();
        expect(Tok::LParen, "'('");
        ExprPtr a = parse_expr();
        expect(Tok::RParen, "')'");
        return Expr::unary(Expr::Kind::Length, a, span);
      }
      case Tok::LParen: {
        take();
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::LBracket: {
        take();
        std::vector<ExprPtr> items;
        if (!at(Tok::RBracket)) {
          items.push_back(parse_expr());
          while (accept(Tok::Comma)) items.push_back(parse_expr());
        }
        expect(Tok::RBracket, "']'");
        return Expr::array(std::move(items), span);
      }
      default: fail("syntax-error", "expected an expression" + booster(), span);
    }
  }

  std::vector<std::map<std::string, Binding>> vars_;
};

}  // namespace

ParseResult<GlobalProtocol> parse_protocol(const std::string& text, const std::string& filename) {
  ParseResult<GlobalProtocol> out;
  try {
    Lexer lexer(text, filename, out.diagnostics);
    ProtocolParser parser(lexer.run(), out.diagnostics);
    out.result = parser.run();
  } catch (const ParseAbort&) {
    if (out.diagnostics.empty())
      out.diagnostics.push_back({Severity::Error, "syntax-error", "parse failed", {filename}});
  }
  return out;
}

ParseResult<Program> parse_program(const std::string& text, const std::string& filename) {
  ParseResult<Program> out;
  try {
    Lexer lexer(text, filename, out.diagnostics);
    ProgramParser parser(lexer.run(), out.diagnostics);
    out.result = parser.run_program();
  } catch (const ParseAbort&) {
    if (out.diagnostics.empty())
      out.diagnostics.push_back({Severity::Error, "syntax-error", "parse failed", {filename}});
  }
  return out;
}

}  // namespace partypes
