#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "partypes/eval.hpp"
#include "partypes/parser.hpp"
#include "partypes/printer.hpp"

using namespace partypes;

namespace {

IndexTermPtr lit(std::int64_t n) { return IndexTerm::int_lit(n); }
IndexTermPtr var(const std::string& n) { return IndexTerm::var(n); }

Value farr(std::initializer_list<double> xs) {
  std::vector<Value> items;
  for (double x : xs) items.push_back(Value::of_float(x));
  return Value::of_array(std::move(items));
}

}  // namespace

TEST_CASE("eval_index basics") {
  Env env;
  CHECK(eval_index(*IndexTerm::binary(IndexTerm::Kind::Max, lit(2), lit(3)), env).as_int() == 3);

  Env with_x = env.extended("x", Value::of_array({Value::of_int(1), Value::of_int(2),
                                                  Value::of_int(3)}));
  CHECK(eval_index(*IndexTerm::length(var("x")), with_x).as_int() == 3);

  Env sized = Env::with_size(4);
  CHECK(eval_index(*IndexTerm::binary(IndexTerm::Kind::Sub, var("size"), lit(1)), sized).as_int() ==
        3);
}

TEST_CASE("eval_index error cases") {
  Env env;
  CHECK_THROWS_AS(eval_index(*var("nope"), env), EvalError);
  CHECK_THROWS_AS(eval_index(*IndexTerm::binary(IndexTerm::Kind::Div, lit(1), lit(0)), env),
                  EvalError);
  CHECK_THROWS_AS(eval_index(*IndexTerm::binary(IndexTerm::Kind::Mod, lit(1), lit(0)), env),
                  EvalError);
  CHECK_THROWS_AS(eval_index(*IndexTerm::length(lit(3)), env), EvalError);
  Env with_a = env.extended("a", farr({1.0, 2.0}));
  CHECK_THROWS_AS(eval_index(*IndexTerm::at(var("a"), lit(5)), with_a), EvalError);
  CHECK_THROWS_AS(eval_index(*IndexTerm::at(var("a"), lit(-1)), with_a), EvalError);
  CHECK(eval_index(*IndexTerm::at(var("a"), lit(1)), with_a).as_float() == 2.0);
}

TEST_CASE("euclidean division and modulo") {
  CHECK(euclid_div(7, 2) == 3);
  CHECK(euclid_mod(7, 2) == 1);
  CHECK(euclid_div(-7, 2) == -4);
  CHECK(euclid_mod(-7, 2) == 1);
  CHECK(euclid_div(7, -2) == -3);
  CHECK(euclid_mod(7, -2) == 1);
  CHECK(euclid_div(-7, -2) == 4);
  CHECK(euclid_mod(-7, -2) == 1);
}

TEST_CASE("eval_prop basics") {
  Env sized = Env::with_size(4);
  auto geq2 = Prop::compare(Prop::Kind::Geq, var("size"), lit(2));
  CHECK(eval_prop(*geq2, sized));

  CHECK(eval_prop(*Prop::truth(), Env()));

  // (x >= 0) and (x <= 10) with x = -1
  auto both = Prop::conj(Prop::compare(Prop::Kind::Geq, var("x"), lit(0)),
                         Prop::compare(Prop::Kind::Leq, var("x"), lit(10)));
  CHECK_FALSE(eval_prop(*both, Env().extended("x", Value::of_int(-1))));
}

TEST_CASE("check_value against refinements") {
  Env env;
  CHECK(check_value(Value::of_int(5), *Datatype::natural(), env).yes());
  CHECK(check_value(Value::of_int(-1), *Datatype::positive(), env).no());

  // float[n] with n = 3
  auto float_n = Datatype::sized_array(Datatype::real(), var("n"));
  Env with_n = env.extended("n", Value::of_int(3));
  CHECK(check_value(farr({1.0, 2.0, 3.0}), *float_n, with_n).yes());
  CHECK(check_value(farr({1.0, 2.0}), *float_n, with_n).no());

  // evaluation error is a third outcome, not false
  CHECK(check_value(farr({1.0}), *float_n, env).is_error());

  // refinement with a true predicate is the base check
  auto base = Datatype::integer();
  auto refined = Datatype::refinement("x", base, Prop::truth());
  for (const Value& v : {Value::of_int(7), Value::of_float(1.5)}) {
    CHECK(check_value(v, *refined, env).outcome == check_value(v, *base, env).outcome);
  }
}

TEST_CASE("check_value nested refinement") {
  // {x: {y: integer | y >= 0} | x >= size}
  auto inner = Datatype::refinement(
      "y", Datatype::integer(), Prop::compare(Prop::Kind::Geq, var("y"), lit(0)));
  auto outer = Datatype::refinement("x", inner,
                                    Prop::compare(Prop::Kind::Geq, var("x"), var("size")));
  Env env = Env::with_size(4);
  CHECK(check_value(Value::of_int(6), *outer, env).yes());
  CHECK(check_value(Value::of_int(2), *outer, env).no());
  CHECK(check_value(Value::of_int(-1), *outer, env).no());
}

TEST_CASE("subst shadowing and literals") {
  // Substituting an outer n leaves broadcast 0 n: float[n] untouched: the
  // payload occurrence is bound by the broadcast itself.
  auto payload = Datatype::sized_array(Datatype::real(), var("n"));
  auto bcast = ProtocolTerm::broadcast(lit(0), "n", payload, ProtocolTerm::skip());
  auto after = subst(bcast, "n", Value::of_int(9));
  CHECK(equal(*bcast, *after));

  auto msg = ProtocolTerm::message(var("x"), IndexTerm::binary(IndexTerm::Kind::Add, var("x"),
                                                               lit(1)),
                                   Datatype::real());
  auto msg2 = subst(msg, "x", Value::of_int(2));
  auto expected = ProtocolTerm::message(lit(2), IndexTerm::binary(IndexTerm::Kind::Add, lit(2),
                                                                  lit(1)),
                                        Datatype::real());
  CHECK(equal(*msg2, *expected));

  auto body = ProtocolTerm::message(var("i"), lit(0), Datatype::real());
  auto loop = ProtocolTerm::foreach("i", lit(1), var("iterations"), body);
  auto loop2 = subst(loop, "iterations", Value::of_int(100));
  auto expected_loop = ProtocolTerm::foreach("i", lit(1), lit(100), body);
  CHECK(equal(*loop2, *expected_loop));
}

TEST_CASE("normalize collapses sequences") {
  auto skip = ProtocolTerm::skip();
  CHECK(normalize(ProtocolTerm::seq({skip, skip}))->kind == ProtocolTerm::Kind::Skip);

  auto a = ProtocolTerm::message(lit(0), lit(1), Datatype::real());
  auto b = ProtocolTerm::message(lit(1), lit(0), Datatype::real());
  auto c = ProtocolTerm::message(lit(0), lit(2), Datatype::real());
  auto nested = ProtocolTerm::seq({ProtocolTerm::seq({a, b}), c});
  auto flat = normalize(nested);
  REQUIRE(flat->kind == ProtocolTerm::Kind::Seq);
  CHECK(flat->items.size() == 3);

  auto single = normalize(ProtocolTerm::seq({a}));
  CHECK(equal(*single, *a));
}

TEST_CASE("env lookup shadows lexically") {
  Env env = Env::with_size(2);
  Env inner = env.extended("v", Value::of_int(1)).extended("v", Value::of_int(5));
  REQUIRE(inner.lookup("v") != nullptr);
  CHECK(inner.lookup("v")->as_int() == 5);
  CHECK(env.lookup("v") == nullptr);
  CHECK(inner.size_value() == 2);
}

namespace {

// Structured random index terms over a fixed variable pool.
IndexTermPtr random_index(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  switch (pick(rng)) {
    case 0: return lit(std::uniform_int_distribution<std::int64_t>(-20, 20)(rng));
    case 1: {
      const char* names[] = {"a", "b", "size"};
      return var(names[std::uniform_int_distribution<int>(0, 2)(rng)]);
    }
    case 2: return IndexTerm::binary(IndexTerm::Kind::Add, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 3: return IndexTerm::binary(IndexTerm::Kind::Sub, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 4: return IndexTerm::binary(IndexTerm::Kind::Mul, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 5: return IndexTerm::binary(IndexTerm::Kind::Div, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 6: return IndexTerm::binary(IndexTerm::Kind::Mod, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 7: return IndexTerm::binary(IndexTerm::Kind::Max, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    case 8: return IndexTerm::binary(IndexTerm::Kind::Min, random_index(rng, depth - 1),
                                     random_index(rng, depth - 1));
    default: return lit(std::uniform_int_distribution<std::int64_t>(-20, 20)(rng));
  }
}

}  // namespace

TEST_CASE("subst commutes with evaluation under an extended environment") {
  std::mt19937_64 rng(20240811);
  Env base = Env::with_size(4);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    IndexTermPtr t = random_index(rng, 3);
    Value v = Value::of_int(std::uniform_int_distribution<std::int64_t>(-5, 5)(rng));
    Env extended = base.extended("a", v).extended("b", Value::of_int(7));
    IndexTermPtr substituted = subst(t, "a", v);

    Value direct, via_subst;
    bool direct_ok = true, subst_ok = true;
    try {
      direct = eval_index(*t, extended);
    } catch (const EvalError&) {
      direct_ok = false;
    }
    try {
      via_subst = eval_index(*substituted, extended);
    } catch (const EvalError&) {
      subst_ok = false;
    }
    CHECK(direct_ok == subst_ok);
    if (direct_ok && subst_ok) {
      CHECK(direct == via_subst);
      ++checked;
    }
  }
  CHECK(checked > 100);  // most samples must be defined, or the test is vacuous
}

TEST_CASE("normalize is idempotent on random protocol bodies") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    // random skip/message/seq nesting
    std::vector<TermPtr> pool{ProtocolTerm::skip(),
                              ProtocolTerm::message(lit(0), lit(1), Datatype::real())};
    std::function<TermPtr(int)> gen = [&](int depth) -> TermPtr {
      if (depth <= 0 || std::uniform_int_distribution<int>(0, 2)(rng) == 0)
        return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      std::vector<TermPtr> items;
      int n = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int i = 0; i < n; ++i) items.push_back(gen(depth - 1));
      return ProtocolTerm::seq(std::move(items));
    };
    TermPtr t = gen(4);
    TermPtr once = normalize(t);
    TermPtr twice = normalize(once);
    CHECK(equal(*once, *twice));
  }
}

TEST_CASE("witness scanning") {
  Env env = Env::with_size(5);
  auto w = witness_value(*Datatype::positive(), env);
  REQUIRE(w.has_value());
  CHECK(w->as_int() == 1);

  auto geq_size = Datatype::refinement("x", Datatype::integer(),
                                       Prop::compare(Prop::Kind::Geq, var("x"), var("size")));
  w = witness_value(*geq_size, env);
  REQUIRE(w.has_value());
  CHECK(w->as_int() == 5);

  CHECK(witness_value(*Datatype::integer(), env)->as_int() == 0);

  auto at_most = Datatype::refinement("x", Datatype::integer(),
                                      Prop::compare(Prop::Kind::Leq, var("x"), lit(-3)));
  CHECK(witness_value(*at_most, env)->as_int() == -3);

  SUBCASE("boundary sets") {
    auto ws = witness_set(*Datatype::positive(), env);
    REQUIRE(ws.size() == 3);
    CHECK(ws[0].as_int() == 1);
    CHECK(ws[1].as_int() == 2);
    CHECK(ws[2].as_int() == (1 << 16));

    auto plain = witness_set(*Datatype::integer(), env);
    REQUIRE(plain.size() == 3);
    CHECK(plain[0].as_int() == 0);
    CHECK(plain[1].as_int() == 1);
    CHECK(plain[2].as_int() == 2);

    // x >= size and x % size = 0 at size 5: boundary witnesses are exact
    auto stride = Datatype::refinement(
        "x", Datatype::integer(),
        Prop::conj(Prop::compare(Prop::Kind::Geq, var("x"), var("size")),
                   Prop::compare(Prop::Kind::Eq,
                                 IndexTerm::binary(IndexTerm::Kind::Mod, var("x"), var("size")),
                                 lit(0))));
    auto sw = witness_set(*stride, env);
    REQUIRE(sw.size() == 2);  // minSat+1 fails the stride
    CHECK(sw[0].as_int() == 5);
    CHECK(sw[1].as_int() == 65535);  // largest multiple of 5 in range
  }

  SUBCASE("array witnesses") {
    auto float_n = Datatype::sized_array(Datatype::real(), var("n"));
    Env with_n = env.extended("n", Value::of_int(4));
    auto aw = witness_value(*float_n, with_n);
    REQUIRE(aw.has_value());
    CHECK(aw->as_array().size() == 4);
  }
}

TEST_CASE("value printing and equality") {
  CHECK(Value::of_int(5).to_string() == "int(5)");
  CHECK(Value::of_float(1.5).to_string() == "float(1.5)");
  CHECK(Value::of_float(3.0).to_string() == "float(3.0)");
  CHECK(Value::of_float(0.0) == Value::of_float(0.0));
  CHECK(Value::of_float(0.0) != Value::of_float(-0.0));  // bit-exact
  CHECK(Value::of_int(0) != Value::of_float(0.0));
  CHECK(farr({1.0, 2.0}) == farr({1.0, 2.0}));
}
