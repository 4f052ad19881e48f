#include "iterreg/stopping.hpp"

#include <cmath>
#include <limits>

#include "iterreg/error.hpp"

namespace iterreg {

long budget_stop(double c, double delta) {
  require(c > 0.0, "budget_stop: c must be positive");
  if (!(delta > 0.0)) throw RuleInapplicable("budget_stop: needs a positive noise level");
  const double k = std::ceil(c / delta);
  require(k < static_cast<double>(std::numeric_limits<long>::max()), "budget_stop: budget overflows");
  return static_cast<long>(k);
}

std::optional<long> discrepancy_stop(const IterateLog& log, double tau_d, double delta) {
  require(tau_d >= 1.0, "discrepancy_stop: tau_d must be >= 1");
  require(delta >= 0.0, "discrepancy_stop: delta must be nonnegative");
  const double level = tau_d * delta;
  for (const auto& row : log.rows)
    if (row.res_noisy <= level) return row.k;
  return std::nullopt;
}

OracleStop oracle_stop(const IterateLog& log) {
  OracleStop best{0, std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& row : log.rows) {
    require(row.dist_ref.has_value(), "oracle_stop: log has no dist_ref column");
    if (!any || *row.dist_ref < best.distance) {
      best = {row.k, *row.dist_ref};
      any = true;
    }
  }
  require(any, "oracle_stop: empty log");
  return best;
}

std::optional<long> apply_rule(const StopRule& rule, const IterateLog& log, double delta) {
  if (const auto* b = std::get_if<BudgetRule>(&rule)) {
    const long budget = budget_stop(b->c, delta);
    std::optional<long> chosen;
    for (const auto& row : log.rows)
      if (row.k <= budget) chosen = row.k;
    return chosen;
  }
  if (const auto* d = std::get_if<DiscrepancyRule>(&rule)) return discrepancy_stop(log, d->tau_d, delta);
  return oracle_stop(log).k;
}

}  // namespace iterreg
