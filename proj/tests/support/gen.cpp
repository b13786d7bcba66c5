#include "support/gen.hpp"

#include <functional>

#include "partypes/eval.hpp"

namespace partypes::testgen {

namespace {

using Rng = std::mt19937_64;

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

IndexTermPtr lit(std::int64_t n) { return IndexTerm::int_lit(n); }
IndexTermPtr var(const std::string& n) { return IndexTerm::var(n); }
IndexTermPtr bin(IndexTerm::Kind k, IndexTermPtr a, IndexTermPtr b) {
  return IndexTerm::binary(k, std::move(a), std::move(b));
}

const char* kNames[] = {"a", "b", "c", "n", "m", "k", "t", "u", "v", "w"};

// The concrete syntax scopes a binder over the rest of its block, so a
// binder can only be the last item of a sequence.
bool ends_in_binder(const TermPtr& t) {
  if (!t) return false;
  if (t->is_binder()) return true;
  if (t->kind == ProtocolTerm::Kind::Seq && !t->items.empty())
    return ends_in_binder(t->items.back());
  return false;
}

struct AstGen {
  Rng& rng;
  std::vector<std::string> scope{"size"};

  std::string fresh_name() { return kNames[pick(rng, 0, 9)]; }

  IndexTermPtr index(int depth) {
    if (depth <= 0 || pick(rng, 0, 2) == 0) {
      if (pick(rng, 0, 1) == 0) return lit(pick(rng, -20, 20));
      return var(scope[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(scope.size()) - 1))]);
    }
    switch (pick(rng, 0, 8)) {
      case 0: return bin(IndexTerm::Kind::Add, index(depth - 1), index(depth - 1));
      case 1: return bin(IndexTerm::Kind::Sub, index(depth - 1), index(depth - 1));
      case 2: return bin(IndexTerm::Kind::Mul, index(depth - 1), index(depth - 1));
      case 3: return bin(IndexTerm::Kind::Div, index(depth - 1), index(depth - 1));
      case 4: return bin(IndexTerm::Kind::Mod, index(depth - 1), index(depth - 1));
      case 5: return bin(IndexTerm::Kind::Max, index(depth - 1), index(depth - 1));
      case 6: return bin(IndexTerm::Kind::Min, index(depth - 1), index(depth - 1));
      case 7: return IndexTerm::length(index(depth - 1));
      default: return IndexTerm::at(index(depth - 1), index(depth - 1));
    }
  }

  PropPtr prop(int depth) {
    if (depth <= 0 || pick(rng, 0, 2) == 0) {
      if (pick(rng, 0, 5) == 0) return Prop::truth();
      Prop::Kind cmp[] = {Prop::Kind::Leq, Prop::Kind::Lt,  Prop::Kind::Eq,
                          Prop::Kind::Geq, Prop::Kind::Gt,  Prop::Kind::Neq};
      return Prop::compare(cmp[pick(rng, 0, 5)], index(depth), index(depth));
    }
    switch (pick(rng, 0, 2)) {
      case 0: return Prop::conj(prop(depth - 1), prop(depth - 1));
      case 1: return Prop::disj(prop(depth - 1), prop(depth - 1));
      default: return Prop::negate(prop(depth - 1));
    }
  }

  DatatypePtr datatype(int depth) {
    switch (pick(rng, 0, depth <= 0 ? 1 : 5)) {
      case 0: return Datatype::integer();
      case 1: return Datatype::real();
      case 2: return Datatype::natural();
      case 3: return Datatype::positive();
      case 4: return Datatype::array(datatype(depth - 1));
      default: {
        if (pick(rng, 0, 1) == 0)
          return Datatype::sized_array(datatype(depth - 1), index(depth - 1));
        std::string v = fresh_name();
        scope.push_back(v);
        PropPtr p = prop(depth - 1);
        scope.pop_back();
        return Datatype::refinement(v, datatype(depth - 1), p);
      }
    }
  }

  TermPtr term(int depth) {
    switch (pick(rng, 0, depth <= 0 ? 4 : 10)) {
      case 0: return ProtocolTerm::skip();
      case 1: return ProtocolTerm::message(index(depth), index(depth), datatype(depth - 1));
      case 2: return ProtocolTerm::scatter(index(depth), datatype(depth - 1));
      case 3: return ProtocolTerm::gather(index(depth), datatype(depth - 1));
      case 4:
        return ProtocolTerm::reduce(index(depth), static_cast<ReduceOp>(pick(rng, 0, 2)),
                                    datatype(depth - 1));
      case 5: {
        std::string v = fresh_name();
        scope.push_back(v);
        DatatypePtr d = datatype(depth - 1);
        TermPtr cont = term(depth - 1);
        scope.pop_back();
        return ProtocolTerm::broadcast(index(depth), v, d, cont);
      }
      case 6: {
        std::string v = fresh_name();
        scope.push_back(v);
        DatatypePtr d = datatype(depth - 1);
        TermPtr cont = term(depth - 1);
        scope.pop_back();
        if (pick(rng, 0, 2) == 0) return ProtocolTerm::allgather(v, d, cont);
        if (pick(rng, 0, 1) == 0)
          return ProtocolTerm::allreduce(static_cast<ReduceOp>(pick(rng, 0, 2)), v, d, cont);
        return ProtocolTerm::val(v, d, cont);
      }
      case 7: {
        std::vector<TermPtr> items;
        int n = pick(rng, 0, 3);
        for (int i = 0; i < n; ++i) {
          items.push_back(term(depth - 1));
          if (ends_in_binder(items.back())) break;
        }
        return ProtocolTerm::seq(std::move(items));
      }
      case 8: {
        std::string v = fresh_name();
        IndexTermPtr lo = index(depth - 1);
        IndexTermPtr hi = index(depth - 1);
        scope.push_back(v);
        TermPtr body = term(depth - 1);
        scope.pop_back();
        return ProtocolTerm::foreach(v, lo, hi, body);
      }
      case 9: return ProtocolTerm::choice(prop(depth - 1), term(depth - 1), term(depth - 1));
      default: return ProtocolTerm::message(index(depth), index(depth), datatype(depth - 1));
    }
  }
};

// ---- rank-safe generator ----

struct SafeGen {
  Rng& rng;
  int binder_id = 0;

  std::string fresh() { return std::string("g") + std::to_string(binder_id++); }

  IndexTermPtr size_minus(int k) { return bin(IndexTerm::Kind::Sub, var("size"), lit(k)); }

  DatatypePtr message_payload() {
    switch (pick(rng, 0, 3)) {
      case 0: return Datatype::real();
      case 1: return Datatype::integer();
      case 2: return Datatype::natural();
      default: return Datatype::positive();
    }
  }

  // Message endpoints that are in range and distinct for every size >= 2.
  TermPtr safe_message() {
    switch (pick(rng, 0, 4)) {
      case 0: return ProtocolTerm::message(lit(0), size_minus(1), message_payload());
      case 1: return ProtocolTerm::message(size_minus(1), lit(0), message_payload());
      case 2: return ProtocolTerm::message(lit(0), size_minus(1), message_payload());
      case 3: return ProtocolTerm::message(size_minus(2), size_minus(1), message_payload());
      default: return ProtocolTerm::message(size_minus(1), size_minus(2), message_payload());
    }
  }

  // Ring exchange: every rank talks to a neighbor, valid for all sizes >= 2.
  TermPtr ring_foreach() {
    std::string i = fresh();
    IndexTermPtr left = bin(IndexTerm::Kind::Mod,
                            bin(IndexTerm::Kind::Add, var(i), size_minus(1)), var("size"));
    IndexTermPtr right = bin(IndexTerm::Kind::Mod, bin(IndexTerm::Kind::Add, var(i), lit(1)),
                             var("size"));
    std::vector<TermPtr> body;
    if (pick(rng, 0, 1) == 0)
      body.push_back(ProtocolTerm::message(var(i), left, message_payload()));
    body.push_back(ProtocolTerm::message(var(i), right, message_payload()));
    return ProtocolTerm::foreach(i, lit(0), size_minus(1),
                                 normalize(ProtocolTerm::seq(std::move(body))));
  }

  // Fan patterns from or to rank 0 over 1..size-1.
  TermPtr fan_foreach() {
    std::string i = fresh();
    TermPtr body = pick(rng, 0, 1) == 0
                       ? ProtocolTerm::message(lit(0), var(i), message_payload())
                       : ProtocolTerm::message(var(i), lit(0), message_payload());
    return ProtocolTerm::foreach(i, lit(1), size_minus(1), body);
  }

  TermPtr empty_foreach() {
    std::string i = fresh();
    return ProtocolTerm::foreach(i, lit(2), lit(1),
                                 ProtocolTerm::message(lit(0), lit(0), Datatype::real()));
  }

  IndexTermPtr root() {
    switch (pick(rng, 0, 2)) {
      case 0: return lit(0);
      case 1: return size_minus(1);
      default: return bin(IndexTerm::Kind::Div, var("size"), lit(2));
    }
  }

  TermPtr collective(int depth) {
    switch (pick(rng, 0, 6)) {
      case 0: return ProtocolTerm::scatter(
          root(), Datatype::sized_array(Datatype::real(),
                                        bin(IndexTerm::Kind::Mul, var("size"),
                                            lit(pick(rng, 1, 3)))));
      case 1: return ProtocolTerm::gather(root(),
                                          Datatype::sized_array(Datatype::real(),
                                                                lit(pick(rng, 1, 3))));
      case 2: return ProtocolTerm::reduce(root(), static_cast<ReduceOp>(pick(rng, 0, 2)),
                                          Datatype::real());
      case 3: {
        std::string v = fresh();
        return ProtocolTerm::broadcast(root(), v, broadcast_payload(), rest(depth - 1, v));
      }
      case 4: {
        std::string v = fresh();
        return ProtocolTerm::allgather(v, Datatype::real(), rest(depth - 1, ""));
      }
      case 5: {
        std::string v = fresh();
        return ProtocolTerm::allreduce(static_cast<ReduceOp>(pick(rng, 0, 2)), v,
                                       Datatype::real(), rest(depth - 1, ""));
      }
      default: {
        std::string v = fresh();
        return ProtocolTerm::val(v, Datatype::positive(), rest(depth - 1, v));
      }
    }
  }

  DatatypePtr broadcast_payload() {
    if (pick(rng, 0, 1) == 0) return Datatype::positive();
    return Datatype::refinement("x", Datatype::integer(),
                                Prop::compare(Prop::Kind::Geq, var("x"), var("size")));
  }

  // Bounded loop over a binder variable; ranks stay in 1..size-1.
  TermPtr binder_loop(const std::string& bound_var) {
    std::string j = fresh();
    IndexTermPtr upper = bin(IndexTerm::Kind::Min, var(bound_var), lit(3));
    IndexTermPtr target =
        bin(IndexTerm::Kind::Add,
            bin(IndexTerm::Kind::Mod, var(j), size_minus(1)), lit(1));
    TermPtr body = ProtocolTerm::message(lit(0), target, message_payload());
    return ProtocolTerm::foreach(j, lit(1), upper, body);
  }

  // Continuation inside a binder scope.
  TermPtr rest(int depth, const std::string& bound_var) {
    std::vector<TermPtr> items;
    int n = pick(rng, 0, 2);
    for (int i = 0; i < n; ++i) {
      if (!bound_var.empty() && pick(rng, 0, 3) == 0)
        items.push_back(binder_loop(bound_var));
      else
        items.push_back(item(depth));
    }
    return normalize(ProtocolTerm::seq(std::move(items)));
  }

  TermPtr item(int depth) {
    if (depth <= 0) return safe_message();
    switch (pick(rng, 0, 6)) {
      case 0: return safe_message();
      case 1: return ring_foreach();
      case 2: return fan_foreach();
      case 3: return empty_foreach();
      case 4: return collective(depth);
      case 5: {
        PropPtr cond = Prop::compare(Prop::Kind::Geq, var("size"), lit(pick(rng, 2, 6)));
        return ProtocolTerm::choice(cond, sequence(depth - 1, 2), sequence(depth - 1, 2));
      }
      default: return sequence(depth - 1, 3);
    }
  }

  TermPtr sequence(int depth, int max_items) {
    std::vector<TermPtr> items;
    int n = pick(rng, 0, max_items);
    for (int i = 0; i < n; ++i) items.push_back(item(depth));
    return normalize(ProtocolTerm::seq(std::move(items)));
  }
};

}  // namespace

GlobalProtocol random_protocol_ast(std::mt19937_64& rng, int max_depth) {
  AstGen gen{rng};
  GlobalProtocol p;
  p.name = std::string("p") + std::to_string(pick(rng, 0, 999));
  p.size_prop = gen.prop(2);
  p.body = normalize(gen.term(max_depth));
  return p;
}

GlobalProtocol random_safe_protocol(std::mt19937_64& rng, int max_depth) {
  SafeGen gen{rng};
  GlobalProtocol p;
  p.name = "gen";
  p.size_prop = Prop::compare(Prop::Kind::Geq, IndexTerm::var("size"), IndexTerm::int_lit(2));
  TermPtr body = gen.sequence(max_depth, 4);
  p.body = body;
  return p;
}

}  // namespace partypes::testgen
