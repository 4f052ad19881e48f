#pragma once

#include <optional>
#include <variant>

#include "iterreg/pdsolver.hpp"

namespace iterreg {

struct BudgetRule {
  double c = 1.0;
};
struct DiscrepancyRule {
  double tau_d = 1.1;
};
struct OracleRule {};

using StopRule = std::variant<BudgetRule, DiscrepancyRule, OracleRule>;

/// A-priori iteration budget k = ceil(c / delta). Throws RuleInapplicable for delta = 0.
long budget_stop(double c, double delta);

/// First recorded k with ||X w_k - y_delta|| <= tau_d * delta, if any.
std::optional<long> discrepancy_stop(const IterateLog& log, double tau_d, double delta);

struct OracleStop {
  long k = 0;
  double distance = 0.0;
};

/// Recorded iteration closest to the reference (dist_ref column), ties to the
/// smaller k. Throws ContractViolation when the log carries no distances.
OracleStop oracle_stop(const IterateLog& log);

/// Stopping index chosen by `rule` on a finished log (budget rules are
/// clamped to the last recorded row at or before the budget).
std::optional<long> apply_rule(const StopRule& rule, const IterateLog& log, double delta);

}  // namespace iterreg
