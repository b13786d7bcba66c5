#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "partypes/eval.hpp"
#include "partypes/parser.hpp"
#include "partypes/printer.hpp"
#include "support/gen.hpp"

using namespace partypes;

namespace {

GlobalProtocol parse_ok(const std::string& text) {
  auto r = parse_protocol(text);
  if (!r.ok()) FAIL(render_diagnostics(r.diagnostics));
  return *r.result;
}

Program parse_prog_ok(const std::string& text) {
  auto r = parse_program(text);
  if (!r.ok()) FAIL(render_diagnostics(r.diagnostics));
  return *r.result;
}

}  // namespace

TEST_CASE("message with size-expression target") {
  auto p = parse_ok("protocol P (true) { message 0, size-1 float }");
  REQUIRE(p.body->kind == ProtocolTerm::Kind::Message);
  auto expected = ProtocolTerm::message(
      IndexTerm::int_lit(0),
      IndexTerm::binary(IndexTerm::Kind::Sub, IndexTerm::var("size"), IndexTerm::int_lit(1)),
      Datatype::real());
  CHECK(equal(*p.body, *expected));
}

TEST_CASE("val with positive sugar") {
  auto p = parse_ok("protocol P (true) { val iterations: positive }");
  REQUIRE(p.body->kind == ProtocolTerm::Kind::Val);
  CHECK(p.body->var == "iterations");
  CHECK(equal(*p.body->payload, *Datatype::positive()));
  CHECK(p.body->cont->kind == ProtocolTerm::Kind::Skip);
}

TEST_CASE("empty protocol") {
  auto p = parse_ok("protocol P (true) { }");
  CHECK(p.name == "P");
  CHECK(p.size_prop->kind == Prop::Kind::True);
  CHECK(p.body->kind == ProtocolTerm::Kind::Skip);
}

TEST_CASE("binder scope extends over the rest of the block") {
  auto p = parse_ok(
      "protocol P (size >= 2) {\n"
      "  message 0, 1 float\n"
      "  val n: natural\n"
      "  message 0, 1 integer\n"
      "  scatter 0 float[n]\n"
      "}\n");
  REQUIRE(p.body->kind == ProtocolTerm::Kind::Seq);
  REQUIRE(p.body->items.size() == 2);
  const auto& val = *p.body->items[1];
  REQUIRE(val.kind == ProtocolTerm::Kind::Val);
  REQUIRE(val.cont->kind == ProtocolTerm::Kind::Seq);
  CHECK(val.cont->items.size() == 2);
}

TEST_CASE("binder variable is visible in its own payload") {
  auto p = parse_ok("protocol P (true) { broadcast 0 n: float[n] }");
  CHECK(p.body->kind == ProtocolTerm::Kind::Broadcast);
}

TEST_CASE("use of unbound variable is a scoping diagnostic") {
  auto r = parse_protocol("protocol P (true) { message x, 1 float }");
  REQUIRE_FALSE(r.ok());
  CHECK(r.diagnostics.front().code == "unbound-variable");

  // binder scope does not leak past the enclosing foreach body
  auto r2 = parse_protocol(
      "protocol P (true) {\n"
      "  foreach i: 0 .. 3 { message 0, 1 float }\n"
      "  message i, 0 float\n"
      "}\n");
  REQUIRE_FALSE(r2.ok());
  CHECK(r2.diagnostics.front().code == "unbound-variable");
}

TEST_CASE("rank is rejected in protocols; reserved names cannot be bound") {
  auto r = parse_protocol("protocol P (true) { message rank, 1 float }");
  REQUIRE_FALSE(r.ok());
  CHECK(r.diagnostics.front().code == "rank-in-protocol");

  auto r2 = parse_protocol("protocol P (true) { val size: integer }");
  REQUIRE_FALSE(r2.ok());
  CHECK(r2.diagnostics.front().code == "reserved-rebind");

  auto r3 = parse_protocol("protocol P (true) { val rank: integer }");
  REQUIRE_FALSE(r3.ok());
  CHECK(r3.diagnostics.front().code == "reserved-rebind");
}

TEST_CASE("uninterpreted predicates get a dedicated diagnostic") {
  auto r = parse_protocol("protocol P (good(size)) { }");
  REQUIRE_FALSE(r.ok());
  CHECK(r.diagnostics.front().code == "uninterpreted-predicate");
}

TEST_CASE("every diagnostic points inside the input") {
  const char* bad[] = {
      "protocol P (true) { message 0 1 float }",
      "protocol P () { }",
      "protocol P (true) { message x, 1 float }",
      "protocol P (true) { foreach i 0 .. 3 { } }",
      "protocol (true) { }",
      "pro P (true) { }",
  };
  for (const char* text : bad) {
    auto r = parse_protocol(text);
    REQUIRE_FALSE(r.ok());
    REQUIRE_FALSE(r.diagnostics.empty());
    int lines = 1;
    for (const char* c = text; *c; ++c) lines += *c == '\n';
    for (const auto& d : r.diagnostics) {
      CHECK(d.span.start_line >= 1);
      CHECK(d.span.start_line <= lines);
      CHECK(d.span.start_col >= 1);
    }
  }
}

TEST_CASE("LF and CRLF parse identically") {
  std::string lf =
      "protocol P (size >= 2) {\n  val n: positive\n  message 0, 1 float[n]\n}\n";
  std::string crlf = lf;
  std::string out;
  for (char c : crlf) {
    if (c == '\n') out += "\r\n";
    else out += c;
  }
  auto a = parse_ok(lf);
  auto b = parse_ok(out);
  CHECK(equal(a, b));
}

TEST_CASE("comments are skipped") {
  auto p = parse_ok(
      "// heading\n"
      "protocol P (true) { // trailing\n"
      "  message 0, 1 float // another\n"
      "}\n");
  CHECK(p.body->kind == ProtocolTerm::Kind::Message);
}

TEST_CASE("choice with and without else") {
  auto p = parse_ok(
      "protocol P (true) {\n"
      "  if (size >= 2) { message 0, 1 float }\n"
      "}\n");
  REQUIRE(p.body->kind == ProtocolTerm::Kind::Choice);
  CHECK(p.body->else_branch->kind == ProtocolTerm::Kind::Skip);

  auto q = parse_ok(
      "protocol P (true) {\n"
      "  if (size >= 2) { message 0, 1 float }\n"
      "  else { }\n"
      "}\n");
  CHECK(q.body->kind == ProtocolTerm::Kind::Choice);
}

TEST_CASE("datatype sugar desugars in the parser") {
  auto p = parse_ok("protocol P (true) { val x: natural\n val y: float[3][] }");
  REQUIRE(p.body->kind == ProtocolTerm::Kind::Val);
  CHECK(equal(*p.body->payload, *Datatype::natural()));
  const auto& inner = *p.body->cont;
  REQUIRE(inner.kind == ProtocolTerm::Kind::Val);
  // float[3][] is an unsized array of float[3]
  CHECK(inner.payload->kind == Datatype::Kind::Array);
  CHECK(equal(*inner.payload->elem, *Datatype::sized_array(Datatype::real(),
                                                           IndexTerm::int_lit(3))));
}

TEST_CASE("nested refinement syntax") {
  auto p = parse_ok(
      "protocol P (true) { val n: {x: {y: integer | y >= 0} | x >= size} }");
  const auto& d = *p.body->payload;
  REQUIRE(d.kind == Datatype::Kind::Refinement);
  CHECK(d.var == "x");
  CHECK(d.elem->kind == Datatype::Kind::Refinement);
}

TEST_CASE("round-trip: parse of pretty equals the original") {
  std::string text = pretty_protocol(parse_ok(
      "protocol fdiff (size >= 2) {\n"
      "  val iterations: positive\n"
      "  broadcast 0 n: {x: {y: integer | y >= 0} | x >= size}\n"
      "  scatter 0 float[n]\n"
      "  foreach iter: 1 .. iterations {\n"
      "    foreach i: 0 .. size - 1 {\n"
      "      message i, (i + size - 1) % size float\n"
      "      message i, (i + 1) % size float\n"
      "    }\n"
      "  }\n"
      "  reduce 0 max float\n"
      "  gather 0 float[n / size]\n"
      "}\n"));
  auto again = parse_ok(text);
  CHECK(equal(parse_ok(text), again));
  CHECK(pretty_protocol(again) == text);
}

TEST_CASE("round-trip property over generated ASTs") {
  std::mt19937_64 rng(20250810);
  int parsed = 0;
  for (int trial = 0; trial < 500; ++trial) {
    GlobalProtocol ast = testgen::random_protocol_ast(rng, 4);
    std::string text = pretty_protocol(ast);
    auto r = parse_protocol(text);
    if (!r.ok()) {
      CAPTURE(text);
      FAIL(render_diagnostics(r.diagnostics));
    }
    GlobalProtocol norm = ast;
    norm.body = normalize(ast.body);
    if (!equal(*r.result, norm)) {
      CAPTURE(text);
      FAIL_CHECK("round-trip mismatch");
    }
    ++parsed;
  }
  CHECK(parsed == 500);
}

// ---- programs ----

TEST_CASE("program statements map to the expected AST") {
  auto p = parse_prog_ok("let v = 1\nsend(1, v)\n");
  REQUIRE(p.body.size() == 2);
  const auto& send = *p.body[1];
  CHECK(send.kind == Stmt::Kind::Comm);
  CHECK(send.comm == CommKind::Send);
  CHECK(send.peer->lit.as_int() == 1);
  CHECK(send.value->kind == Expr::Kind::Var);
  CHECK(send.value->name == "v");
}

TEST_CASE("broadcast binding mirrors the collective call") {
  auto p = parse_prog_ok("extern len: positive\nlet n = broadcast(0, len)\n");
  REQUIRE(p.body.size() == 1);
  const auto& s = *p.body[0];
  CHECK(s.comm == CommKind::Broadcast);
  CHECK(s.bind == "n");
  CHECK(s.peer->lit.as_int() == 0);
  CHECK(s.value->name == "len");
}

TEST_CASE("for loop over an applied bound") {
  auto p = parse_prog_ok(
      "extern iterations: positive\n"
      "for i in 1 .. iterations {\n"
      "  send(0, i)\n"
      "}\n");
  const auto& loop = *p.body[0];
  CHECK(loop.kind == Stmt::Kind::For);
  CHECK(loop.name == "i");
  CHECK(loop.lo->lit.as_int() == 1);
  CHECK(loop.hi->name == "iterations");
  CHECK(loop.body.size() == 1);
}

TEST_CASE("program scoping errors") {
  CHECK(parse_program("send(0, v)\n").diagnostics.front().code == "unbound-variable");
  CHECK(parse_program("let x = 1\nlet x = 2\n").diagnostics.front().code == "duplicate-binding");
  CHECK(parse_program("rank = 3\n").diagnostics.front().code == "assign-immutable");
  CHECK(parse_program("x = 3\n").diagnostics.front().code == "assign-undeclared");
  CHECK(parse_program("let x = 1\nextern y: integer\n").diagnostics.front().code ==
        "extern-position");
  CHECK(parse_program("for i in 1 .. 3 { i = 0 }\n").diagnostics.front().code ==
        "assign-immutable");
}

TEST_CASE("program pretty-print reparses to an equal AST") {
  const char* text =
      "extern iterations: positive\n"
      "extern inputVector: float[]\n"
      "apply(iterations)\n"
      "let n = broadcast(0, length(inputVector))\n"
      "let local = scatter(0, inputVector)\n"
      "let acc = 0.0\n"
      "for i in 0 .. n - 1 {\n"
      "  if (i % size = rank) {\n"
      "    acc = acc + local[i % length(local)] * 2.0\n"
      "  } else {\n"
      "    acc = acc - 1.0\n"
      "  }\n"
      "}\n"
      "let total = allreduce(sum, acc)\n"
      "let top = reduce(0, max, acc)\n"
      "let all = allgather(acc)\n"
      "let got = gather(0, acc)\n"
      "let m = recv(max(0, 1))\n";
  Program p = parse_prog_ok(text);
  Program q = parse_prog_ok(pretty_program(p));
  CHECK(pretty_program(p) == pretty_program(q));
}
