#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/value.hpp"

namespace partypes {

/// Immutable name-to-value environment with lexical shadowing (the most
/// recently added binding wins). Extension shares structure with the parent.
class Env {
 public:
  Env() = default;
  static Env with_size(std::int64_t size);

  Env extended(std::string name, Value v) const;
  const Value* lookup(const std::string& name) const;
  std::int64_t size_value() const;  // throws EvalError if `size` is unbound

 private:
  struct Node {
    std::string name;
    Value value;
    std::shared_ptr<const Node> next;
  };
  std::shared_ptr<const Node> head_;
};

enum class EvalErrorKind {
  UnboundVariable,
  DivisionByZero,
  IndexOutOfRange,
  TypeMismatch,
  RangeTooLarge,
  NoWitness,
};

struct EvalError : std::runtime_error {
  EvalError(EvalErrorKind kind, std::string message, SourceSpan span = {})
      : std::runtime_error(message), kind(kind), span(span) {}
  EvalErrorKind kind;
  SourceSpan span;
};

// Euclidean division: remainder is always in [0, |b|).
std::int64_t euclid_div(std::int64_t a, std::int64_t b);
std::int64_t euclid_mod(std::int64_t a, std::int64_t b);

/// Left-to-right fold in rank order (deterministic for float sums); arrays
/// fold elementwise. Throws EvalError on shape mismatches or an empty list.
Value fold_values(ReduceOp op, const std::vector<Value>& contributions);

/// Rank-ordered concatenation: arrays are flattened one level, scalars are
/// collected into an array.
Value concat_values(const std::vector<Value>& contributions);

Value eval_index(const IndexTerm& t, const Env& env);
bool eval_prop(const Prop& p, const Env& env);

/// Three-valued membership check: an evaluation error (unbound variable,
/// bad index, ...) is reported as Error, never conflated with No.
struct CheckResult {
  enum class Outcome { Yes, No, Error };
  Outcome outcome;
  const Datatype* failed = nullptr;  // No: the datatype that rejected the value
  std::string error;                 // Error: what failed to evaluate

  bool yes() const { return outcome == Outcome::Yes; }
  bool no() const { return outcome == Outcome::No; }
  bool is_error() const { return outcome == Outcome::Error; }
  std::string detail() const;  // pretty(failed) or the error text
};

CheckResult check_value(const Value& v, const Datatype& d, const Env& env);

// Capture-avoiding substitution of a value for a free variable. Total: type
// errors surface later, at evaluation time.
IndexTermPtr subst(const IndexTermPtr& t, const std::string& var, const Value& v);
PropPtr subst(const PropPtr& p, const std::string& var, const Value& v);
DatatypePtr subst(const DatatypePtr& d, const std::string& var, const Value& v);
TermPtr subst(const TermPtr& t, const std::string& var, const Value& v);

/// Canonical form: nested Seq flattened, Skip dropped from sequences,
/// empty and singleton sequences collapsed. Idempotent, semantics-preserving.
TermPtr normalize(const TermPtr& t);

// ---- Witness construction (bounded, deliberately incomplete) ----
//
// Integer scans are capped at |v| <= 2^16, array-length scans at 4096 for the
// canonical witness and 256 for boundary sets. `binder_var`, when non-empty,
// is bound to the candidate itself while evaluating the refinement, since a
// binder's payload may mention the binder's own variable.

constexpr std::int64_t kWitnessScanBound = 1 << 16;
constexpr std::int64_t kWitnessArrayScanBound = 4096;
constexpr std::int64_t kWitnessArrayBoundaryBound = 256;

/// First satisfying value scanning outward from zero (0, 1, -1, 2, -2, ...);
/// for arrays, the shortest satisfying length filled with element witnesses.
std::optional<Value> witness_value(const Datatype& d, const Env& env,
                                   const std::string& binder_var = "");

/// Boundary witnesses: smallest satisfying value in the scan range, that
/// value + 1 when it also satisfies, and the largest satisfying value.
/// Unrefined integers and floats get {0, 1, 2}; unrefined arrays lengths
/// {0, 1, 2}. Empty result means no witness was found in range.
std::vector<Value> witness_set(const Datatype& d, const Env& env,
                               const std::string& binder_var = "");

}  // namespace partypes
