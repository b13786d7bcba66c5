#pragma once

#include <optional>
#include <string>
#include <vector>

#include "partypes/ast.hpp"
#include "partypes/source.hpp"

namespace partypes {

struct SizeRange {
  int min = 1;
  int max = 16;
};

enum class SizeStatus { Ok, Excluded, Error };

struct SizeVerdict {
  int size = 0;
  SizeStatus status = SizeStatus::Ok;
  std::vector<Diagnostic> diagnostics;
};

struct WellformednessReport {
  std::string protocol;
  SizeRange range;
  std::vector<SizeVerdict> per_size;  // one entry per size in [min, max], ascending
  std::optional<int> inferred_min_size;

  bool all_ok() const;  // every non-excluded size is Ok
};

/// Bounded well-formedness: every admissible size in the range is checked
/// concretely — foreach ranges enumerated, bound variables explored over
/// refinement boundary witnesses. Sizes rejected by the header proposition
/// are reported as excluded, not as failures.
WellformednessReport check_protocol(const GlobalProtocol& p, SizeRange r);

/// Smallest s in the range such that every size in [s, r.max] passes with the
/// header proposition replaced by true. A bounded heuristic, not a proof.
std::optional<int> infer_min_size(const GlobalProtocol& p, SizeRange r);

}  // namespace partypes
