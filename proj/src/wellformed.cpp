#include "partypes/wellformed.hpp"

#include <algorithm>

#include "partypes/eval.hpp"
#include "partypes/printer.hpp"

namespace partypes {

namespace {

constexpr std::int64_t kForeachGuard = 100000;

struct Walker {
  std::int64_t size;
  std::vector<Diagnostic> diags;

  void report(const std::string& code, const std::string& message, const SourceSpan& span) {
    for (const auto& d : diags)
      if (d.code == code && d.message == message && d.span.start_line == span.start_line &&
          d.span.start_col == span.start_col)
        return;
    diags.push_back({Severity::Error, code, message, span});
  }

  std::optional<std::int64_t> eval_rank(const IndexTermPtr& t, const Env& env, const char* what) {
    try {
      Value v = eval_index(*t, env);
      if (!v.is_int()) {
        report("eval-error", std::string(what) + " is not an integer: " + pretty(*t), t->span);
        return std::nullopt;
      }
      return v.as_int();
    } catch (const EvalError& e) {
      report("eval-error", std::string(what) + " failed to evaluate: " + e.what(), t->span);
      return std::nullopt;
    }
  }

  void check_root(const IndexTermPtr& root, const Env& env) {
    auto r = eval_rank(root, env, "collective root");
    if (r && (*r < 0 || *r >= size))
      report("root-out-of-range",
             "collective root " + std::to_string(*r) + " is outside 0..size-1 (size " +
                 std::to_string(size) + ")",
             root->span);
  }

  // (d) array length terms must evaluate; refinement propositions must
  // evaluate on a probe value of the base type.
  void check_datatype(const Datatype& d, const Env& env, const SourceSpan& span) {
    switch (d.kind) {
      case Datatype::Kind::Integer:
      case Datatype::Kind::Float: return;
      case Datatype::Kind::Array: {
        if (d.length) {
          try {
            Value n = eval_index(*d.length, env);
            if (!n.is_int())
              report("array-length-error", "array length is not an integer", d.length->span);
            else if (n.as_int() < 0)
              report("array-length-error", "array length " + std::to_string(n.as_int()) +
                                               " is negative", d.length->span);
          } catch (const EvalError& e) {
            report("array-length-error", std::string("array length failed to evaluate: ") +
                                             e.what(), d.length->span);
          }
        }
        check_datatype(*d.elem, env, span);
        return;
      }
      case Datatype::Kind::Refinement: {
        check_datatype(*d.elem, env, span);
        auto probe = witness_value(*d.elem, env);
        if (!probe) return;  // base has no witness; elem check already flagged anything odd
        CheckResult r = check_value(*probe, d, env.extended(d.var, *probe));
        if (r.is_error())
          report("refinement-eval-error", "refinement failed to evaluate: " + r.detail(), d.span);
        return;
      }
    }
  }

  std::vector<Value> binder_witnesses(const std::string& var, const Datatype& d, const Env& env,
                                      const SourceSpan& span) {
    std::vector<Value> ws = witness_set(d, env, var);
    if (ws.empty())
      report("no-witness",
             "no value satisfying " + pretty(d) + " found in the bounded scan; cannot check " +
                 var + "'s scope",
             span);
    return ws;
  }

  void walk(const ProtocolTerm& t, const Env& env) {
    using K = ProtocolTerm::Kind;
    switch (t.kind) {
      case K::Skip: return;
      case K::Message: {
        auto from = eval_rank(t.from, env, "message source");
        auto to = eval_rank(t.to, env, "message target");
        if (from && (*from < 0 || *from >= size))
          report("rank-out-of-range",
                 "message source " + std::to_string(*from) + " is outside 0..size-1 (size " +
                     std::to_string(size) + ")",
                 t.from->span);
        if (to && (*to < 0 || *to >= size))
          report("rank-out-of-range",
                 "message target " + std::to_string(*to) + " is outside 0..size-1 (size " +
                     std::to_string(size) + ")",
                 t.to->span);
        if (from && to && *from == *to)
          report("self-message",
                 "message from and to ranks are both " + std::to_string(*from), t.span);
        check_datatype(*t.payload, env, t.span);
        return;
      }
      case K::Scatter:
      case K::Gather:
      case K::Reduce:
        check_root(t.from, env);
        check_datatype(*t.payload, env, t.span);
        return;
      case K::Broadcast:
      case K::Allgather:
      case K::Allreduce:
      case K::Val: {
        if (t.kind == K::Broadcast) check_root(t.from, env);
        check_datatype(*t.payload, env, t.span);
        if (!t.cont || t.cont->kind == K::Skip) return;
        for (const Value& w : binder_witnesses(t.var, *t.payload, env, t.span))
          walk(*t.cont, env.extended(t.var, w));
        return;
      }
      case K::Seq:
        for (const auto& item : t.items) walk(*item, env);
        return;
      case K::Foreach: {
        auto lo = eval_rank(t.lo, env, "foreach lower bound");
        auto hi = eval_rank(t.hi, env, "foreach upper bound");
        if (!lo || !hi) return;
        if (*lo > *hi) return;  // empty range: a legal no-op
        std::int64_t count = *hi - *lo + 1;
        if (count > kForeachGuard) {
          report("range-too-large",
                 "foreach range " + std::to_string(*lo) + ".." + std::to_string(*hi) + " (" +
                     std::to_string(count) + " iterations) is too large for bounded checking",
                 t.span);
          return;
        }
        // Iterations are indistinguishable when the body ignores the loop
        // variable; checking one of them is then exact.
        if (!mentions_var(*t.body, t.var)) {
          walk(*t.body, env.extended(t.var, Value::of_int(*lo)));
          return;
        }
        for (std::int64_t i = *lo; i <= *hi; ++i)
          walk(*t.body, env.extended(t.var, Value::of_int(i)));
        return;
      }
      case K::Choice: {
        bool taken;
        try {
          taken = eval_prop(*t.cond, env);
        } catch (const EvalError& e) {
          report("cond-eval-error", std::string("choice condition failed to evaluate: ") +
                                        e.what(), t.span);
          return;
        }
        // Only the branch actually taken at this environment is walked;
        // the other is unreachable at this size and binding.
        walk(taken ? *t.then_branch : *t.else_branch, env);
        return;
      }
    }
  }
};

SizeVerdict check_one_size(const GlobalProtocol& p, int size, bool ignore_header) {
  SizeVerdict verdict;
  verdict.size = size;
  Env env = Env::with_size(size);
  if (!ignore_header) {
    bool admissible;
    try {
      admissible = eval_prop(*p.size_prop, env);
    } catch (const EvalError& e) {
      verdict.status = SizeStatus::Error;
      verdict.diagnostics.push_back(
          {Severity::Error, "cond-eval-error",
           std::string("size proposition failed to evaluate: ") + e.what(), p.span});
      return verdict;
    }
    if (!admissible) {
      verdict.status = SizeStatus::Excluded;
      return verdict;
    }
  }
  Walker w{size, {}};
  w.walk(*p.body, env);
  verdict.status = w.diags.empty() ? SizeStatus::Ok : SizeStatus::Error;
  verdict.diagnostics = std::move(w.diags);
  return verdict;
}

}  // namespace

bool WellformednessReport::all_ok() const {
  return std::all_of(per_size.begin(), per_size.end(),
                     [](const SizeVerdict& v) { return v.status != SizeStatus::Error; });
}

WellformednessReport check_protocol(const GlobalProtocol& p, SizeRange r) {
  WellformednessReport report;
  report.protocol = p.name;
  report.range = r;
  for (int s = r.min; s <= r.max; ++s) report.per_size.push_back(check_one_size(p, s, false));
  report.inferred_min_size = infer_min_size(p, r);
  return report;
}

std::optional<int> infer_min_size(const GlobalProtocol& p, SizeRange r) {
  std::optional<int> candidate;
  for (int s = r.max; s >= r.min; --s) {
    if (check_one_size(p, s, true).status == SizeStatus::Ok)
      candidate = s;
    else
      break;
  }
  return candidate;
}

}  // namespace partypes
