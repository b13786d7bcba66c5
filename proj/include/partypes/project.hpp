#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/eval.hpp"

namespace partypes {

/// Residual protocol of one rank. Immutable: advancing returns a new state.
/// `size` (and any caller-supplied bindings) are substituted into the body on
/// construction, so the residual is closed up to later binder values.
struct LocalState {
  TermPtr residual;  // normalized
  Env env;           // always binds size; grows at binder actions
  int rank = 0;
  int size = 1;
};

LocalState make_local_state(const GlobalProtocol& p, int size, int rank, const Env& extra = Env());

/// One projected step for a rank.
struct LocalAction {
  enum class Kind {
    Send, Recv, Broadcast, Scatter, Gather, Reduce, Allgather, Allreduce, Apply, EnterChoice,
  };

  Kind kind;
  int peer = -1;  // Send target, Recv source, collective root
  ReduceOp op = ReduceOp::Sum;
  std::string var;
  DatatypePtr payload;
  bool took_then = false;  // EnterChoice

  bool is_point_to_point() const { return kind == Kind::Send || kind == Kind::Recv; }
  bool binds_value() const {
    return kind == Kind::Broadcast || kind == Kind::Allgather || kind == Kind::Allreduce ||
           kind == Kind::Apply;
  }
  bool is_collective() const {
    return kind == Kind::Broadcast || kind == Kind::Scatter || kind == Kind::Gather ||
           kind == Kind::Reduce || kind == Kind::Allgather || kind == Kind::Allreduce;
  }
};

std::string to_string(const LocalAction& a);
bool same_action(const LocalAction& a, const LocalAction& b);  // payloads alpha-compared

/// Outcome of looking at the head of a residual protocol. NeedsValue is
/// reserved for a lazy expansion mode; the eager design never produces it
/// (asserted by test).
enum class HeadStatus { Action, AtSkip, NeedsValue };

struct Head {
  HeadStatus status = HeadStatus::AtSkip;
  LocalAction action;
  // Continuation split: for binder actions `scope` is the extent the bound
  // variable covers; `after` is everything past it.
  TermPtr scope;
  TermPtr after;
};

struct ProtocolMismatchError : std::runtime_error {
  ProtocolMismatchError(std::string expected, std::string offered)
      : std::runtime_error("expected " + expected + ", offered " + offered),
        expected(std::move(expected)),
        offered(std::move(offered)) {}
  std::string expected, offered;
};

struct RefinementViolationError : std::runtime_error {
  RefinementViolationError(std::string refinement, std::string value)
      : std::runtime_error("value " + value + " does not satisfy " + refinement),
        refinement(std::move(refinement)),
        value(std::move(value)) {}
  std::string refinement, value;
};

/// First action of the residual for this rank, skipping messages that involve
/// other ranks only. Foreach terms are expanded eagerly at the current
/// environment. Throws EvalError when a rank or range fails to evaluate.
Head project_head(const LocalState& s);

/// Consume one action. `offered` must match the projected head structurally
/// (payload compared only when it is non-null). Value-carrying actions need
/// `v`, the exchanged value, which must satisfy the payload refinement.
/// Binder actions extend the environment and substitute through the binder's
/// scope; they bind `bound` when given, else `v`. The distinction matters for
/// allgather/allreduce, where the checked contribution is per-rank but the
/// bound value is the collectively identical concatenation or fold.
LocalState advance(const LocalState& s, const LocalAction& offered,
                   const std::optional<Value>& v = std::nullopt,
                   const std::optional<Value>& bound = std::nullopt);

/// True iff nothing remains for this rank (the residual is skip-equivalent).
bool is_skip(const LocalState& s);

/// Full per-rank action sequences at a concrete size, using environment
/// bindings when present and canonical witness values otherwise.
std::vector<std::vector<LocalAction>> expansion_table(const GlobalProtocol& p, int size,
                                                      const Env& env = Env());

/// Witness value for a value-carrying action, honoring pre-bound variables.
Value action_witness(const LocalAction& a, const Env& env);

/// What an allgather/allreduce binder would bind when every rank contributes
/// `witness`; nullopt for other actions.
std::optional<Value> witness_binding(const LocalAction& a, const Value& witness, int size);

}  // namespace partypes
