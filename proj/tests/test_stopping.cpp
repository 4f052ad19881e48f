#include <doctest.h>

#include "iterreg/error.hpp"
#include "iterreg/stopping.hpp"
#include "test_support.hpp"

using namespace iterreg;

namespace {

IterateLog log_from(const std::vector<double>& res, const std::vector<double>& dist = {}) {
  IterateLog log;
  for (std::size_t i = 0; i < res.size(); ++i) {
    LogRow row;
    row.k = static_cast<long>(i) * 10;
    row.res_noisy = res[i];
    row.res_clean = res[i];
    if (!dist.empty()) row.dist_ref = dist[i];
    log.rows.push_back(row);
  }
  return log;
}

}  // namespace

TEST_CASE("budget rule by hand") {
  CHECK(budget_stop(1.0, 0.5) == 2);
  CHECK(budget_stop(1.0, 0.3) == 4);
  CHECK(budget_stop(5.0, 0.1) == 50);
  CHECK_THROWS_AS(budget_stop(1.0, 0.0), RuleInapplicable);
  CHECK_THROWS_AS(budget_stop(0.0, 1.0), ContractViolation);
}

TEST_CASE("budget times delta lies in [c, c + delta]") {
  auto rng = testing_support::rng_for(1);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double c = u(rng), delta = u(rng) / 10.0;
    const double kd = static_cast<double>(budget_stop(c, delta)) * delta;
    CHECK(kd >= c * (1.0 - 1e-12));
    CHECK(kd <= (c + delta) * (1.0 + 1e-12));
  }
}

TEST_CASE("discrepancy rule scans the recorded residuals") {
  const auto log = log_from({5.0, 3.0, 1.2, 1.05, 0.9});
  CHECK(discrepancy_stop(log, 1.0, 10.0) == 0);
  CHECK(discrepancy_stop(log, 1.1, 1.0) == 30);
  CHECK(discrepancy_stop(log, 1.0, 1.0) == 40);
  CHECK_FALSE(discrepancy_stop(log, 1.0, 0.0).has_value());
  CHECK_THROWS_AS(discrepancy_stop(log, 0.9, 1.0), ContractViolation);
}

TEST_CASE("oracle rule") {
  SUBCASE("monotone distances pick the last row") {
    CHECK(oracle_stop(log_from({1, 1, 1}, {3, 2, 1})).k == 20);
  }
  SUBCASE("U-shaped curve gives an interior minimum") {
    const auto s = oracle_stop(log_from({1, 1, 1, 1}, {3, 1, 2, 2.5}));
    CHECK(s.k == 10);
    CHECK(s.distance == 1.0);
  }
  SUBCASE("ties go to the smaller k") {
    CHECK(oracle_stop(log_from({1, 1, 1, 1}, {3, 1, 2, 1})).k == 10);
  }
  SUBCASE("missing distances are a contract violation") {
    CHECK_THROWS_AS(oracle_stop(log_from({1, 1})), ContractViolation);
  }
}

TEST_CASE("oracle distance is below every recorded distance") {
  auto rng = testing_support::rng_for(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(30), r(30, 1.0);
    for (auto& x : d) x = u(rng);
    const auto s = oracle_stop(log_from(r, d));
    for (double x : d) CHECK(s.distance <= x);
  }
}

TEST_CASE("apply_rule dispatches") {
  const auto log = log_from({5.0, 3.0, 1.2, 1.05, 0.9}, {4, 2, 3, 3, 3});
  CHECK(apply_rule(BudgetRule{3.5}, log, 0.1) == 30);
  CHECK(apply_rule(DiscrepancyRule{}, log, 1.0) == 30);
  CHECK(apply_rule(OracleRule{}, log, 1.0) == 10);
  CHECK_THROWS_AS(apply_rule(BudgetRule{1.0}, log, 0.0), RuleInapplicable);
}
