#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "partypes/source.hpp"
#include "partypes/value.hpp"

namespace partypes {

struct IndexTerm;
struct Prop;
struct Datatype;
struct ProtocolTerm;

using IndexTermPtr = std::shared_ptr<const IndexTerm>;
using PropPtr = std::shared_ptr<const Prop>;
using DatatypePtr = std::shared_ptr<const Datatype>;
using TermPtr = std::shared_ptr<const ProtocolTerm>;

/// Index terms: the arithmetic language ranks, ranges and array lengths are
/// written in. Literals hold a Value so substitution can embed floats and
/// arrays; the surface grammar only ever produces integer literals.
struct IndexTerm {
  enum class Kind { Var, Lit, Add, Sub, Mul, Div, Mod, Max, Min, Length, At };

  Kind kind;
  std::string name;       // Var
  Value lit;              // Lit
  IndexTermPtr lhs, rhs;  // binary ops; Length uses lhs only
  SourceSpan span;

  static IndexTermPtr var(std::string name, SourceSpan span = {});
  static IndexTermPtr int_lit(std::int64_t v, SourceSpan span = {});
  static IndexTermPtr value_lit(Value v, SourceSpan span = {});
  static IndexTermPtr binary(Kind op, IndexTermPtr l, IndexTermPtr r, SourceSpan span = {});
  static IndexTermPtr length(IndexTermPtr arg, SourceSpan span = {});
  static IndexTermPtr at(IndexTermPtr array, IndexTermPtr index, SourceSpan span = {});
};

/// Index propositions over index terms.
struct Prop {
  enum class Kind { True, Leq, Lt, Eq, Geq, Gt, Neq, And, Or, Not };

  Kind kind = Kind::True;
  IndexTermPtr lhs, rhs;  // comparisons
  PropPtr left, right;    // And/Or; Not uses left
  SourceSpan span;

  static PropPtr truth(SourceSpan span = {});
  static PropPtr compare(Kind op, IndexTermPtr l, IndexTermPtr r, SourceSpan span = {});
  static PropPtr conj(PropPtr l, PropPtr r, SourceSpan span = {});
  static PropPtr disj(PropPtr l, PropPtr r, SourceSpan span = {});
  static PropPtr negate(PropPtr p, SourceSpan span = {});
};

/// Datatypes: integer, float, arrays, and refinements {x: D | p}.
/// Surface sugar (natural, positive, D[n]) is desugared by the parser; the
/// checker only ever sees these four constructors.
struct Datatype {
  enum class Kind { Integer, Float, Array, Refinement };

  Kind kind;
  DatatypePtr elem;     // Array element / Refinement base
  IndexTermPtr length;  // Array only; may be null (the parser never sets it)
  std::string var;      // Refinement binder
  PropPtr prop;         // Refinement predicate
  SourceSpan span;

  static DatatypePtr integer(SourceSpan span = {});
  static DatatypePtr real(SourceSpan span = {});
  static DatatypePtr array(DatatypePtr elem, IndexTermPtr length = nullptr, SourceSpan span = {});
  static DatatypePtr refinement(std::string var, DatatypePtr base, PropPtr prop, SourceSpan span = {});

  /// natural = {x: integer | x >= 0}
  static DatatypePtr natural(SourceSpan span = {});
  /// positive = {x: integer | x >= 1}
  static DatatypePtr positive(SourceSpan span = {});
  /// D[n] = {x: D[] | length(x) = n}; picks a binder not free in `n`.
  static DatatypePtr sized_array(DatatypePtr elem, IndexTermPtr n, SourceSpan span = {});
};

enum class ReduceOp { Max, Min, Sum };

const char* to_string(ReduceOp op);

/// One step of a global protocol. Binder constructors (Broadcast, Allgather,
/// Allreduce, Val) carry their scope extent explicitly in `cont`: the parser
/// moves everything that follows them in the enclosing block inside, so
/// substitution never has to guess how far a binding reaches. The bound
/// variable is also in scope inside the constructor's own payload.
struct ProtocolTerm {
  enum class Kind {
    Skip,
    Message,    // from, to, payload
    Broadcast,  // root=from, var, payload, cont
    Scatter,    // root=from, payload
    Gather,     // root=from, payload
    Reduce,     // root=from, op, payload
    Allgather,  // var, payload, cont
    Allreduce,  // op, var, payload, cont
    Seq,        // items
    Foreach,    // var, lo, hi, body
    Choice,     // cond, then_branch, else_branch
    Val,        // var, payload, cont
  };

  Kind kind = Kind::Skip;
  IndexTermPtr from, to;  // Message endpoints; collectives keep the root in `from`
  std::string var;
  DatatypePtr payload;
  ReduceOp op = ReduceOp::Sum;
  std::vector<TermPtr> items;
  IndexTermPtr lo, hi;
  TermPtr body;
  PropPtr cond;
  TermPtr then_branch, else_branch;
  TermPtr cont;
  SourceSpan span;

  static TermPtr skip(SourceSpan span = {});
  static TermPtr message(IndexTermPtr from, IndexTermPtr to, DatatypePtr payload, SourceSpan span = {});
  static TermPtr broadcast(IndexTermPtr root, std::string var, DatatypePtr payload, TermPtr cont,
                           SourceSpan span = {});
  static TermPtr scatter(IndexTermPtr root, DatatypePtr payload, SourceSpan span = {});
  static TermPtr gather(IndexTermPtr root, DatatypePtr payload, SourceSpan span = {});
  static TermPtr reduce(IndexTermPtr root, ReduceOp op, DatatypePtr payload, SourceSpan span = {});
  static TermPtr allgather(std::string var, DatatypePtr payload, TermPtr cont, SourceSpan span = {});
  static TermPtr allreduce(ReduceOp op, std::string var, DatatypePtr payload, TermPtr cont,
                           SourceSpan span = {});
  static TermPtr seq(std::vector<TermPtr> items, SourceSpan span = {});
  static TermPtr foreach (std::string var, IndexTermPtr lo, IndexTermPtr hi, TermPtr body,
                          SourceSpan span = {});
  static TermPtr choice(PropPtr cond, TermPtr then_branch, TermPtr else_branch, SourceSpan span = {});
  static TermPtr val(std::string var, DatatypePtr payload, TermPtr cont, SourceSpan span = {});

  bool is_binder() const {
    return kind == Kind::Broadcast || kind == Kind::Allgather || kind == Kind::Allreduce ||
           kind == Kind::Val;
  }
};

struct GlobalProtocol {
  std::string name;
  PropPtr size_prop;
  TermPtr body;
  SourceSpan span;
};

// Structural equality, ignoring spans. Literal values compare bit-exactly.
bool equal(const IndexTerm& a, const IndexTerm& b);
bool equal(const Prop& a, const Prop& b);
bool equal(const Datatype& a, const Datatype& b);
bool equal(const ProtocolTerm& a, const ProtocolTerm& b);
bool equal(const GlobalProtocol& a, const GlobalProtocol& b);

/// Structural equality up to renaming of refinement binders. This is the
/// comparison used when matching program payloads against protocol payloads.
bool alpha_equivalent(const Datatype& a, const Datatype& b);

// Free protocol variables (ignores `size`-is-special: size is just a name).
void collect_free_vars(const IndexTerm& t, std::set<std::string>& out);
void collect_free_vars(const Prop& p, std::set<std::string>& out);
void collect_free_vars(const Datatype& d, std::set<std::string>& out);
void collect_free_vars(const ProtocolTerm& t, std::set<std::string>& out);
bool mentions_var(const ProtocolTerm& t, const std::string& name);

}  // namespace partypes
