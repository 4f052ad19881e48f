#include <doctest.h>

#include <cmath>

#include "iterreg/baseline.hpp"
#include "iterreg/error.hpp"
#include "test_support.hpp"

using namespace iterreg;
using testing_support::gaussian_matrix;
using testing_support::gaussian_vector;
using testing_support::rng_for;

TEST_CASE("lambda grid by hand") {
  Vector y(2);
  y << 1.0, -0.5;
  const auto I = LinearOperator::identity(2);
  const auto grid = lambda_grid(I, y);
  REQUIRE(grid.size() == 100);
  CHECK(grid.front() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(grid.back() == doctest::Approx(1e-3).epsilon(1e-12));
  const auto two = lambda_grid(I, y, 2, 1.0);
  REQUIRE(two.size() == 2);
  CHECK(two[1] == doctest::Approx(0.1).epsilon(1e-15));
  for (std::size_t t = 1; t + 1 < grid.size(); ++t)
    CHECK(grid[t + 1] / grid[t] == doctest::Approx(grid[1] / grid[0]).epsilon(1e-12));
  CHECK_THROWS_AS(lambda_grid(I, Vector::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(lambda_grid(I, y, 1), ContractViolation);
}

TEST_CASE("identity Lasso is soft-thresholding at lambda / 2") {
  auto rng = rng_for(1);
  const Vector y = gaussian_vector(rng, 12, 2.0);
  const auto I = LinearOperator::identity(12);
  for (double lambda : {0.1, 1.0, 3.0}) {
    const auto res = solve_tikhonov(I, Bias::l1(), y, lambda, Vector::Zero(12));
    CHECK(res.converged);
    CHECK((res.w - soft_threshold(y, lambda / 2.0)).norm() <= 1e-6);
  }
  const auto grid = lambda_grid(I, y, 10, 2.0);
  const auto path = lasso_path(I, y, grid);
  for (std::size_t t = 0; t < grid.size(); ++t)
    CHECK((path.solutions[t] - soft_threshold(y, grid[t] / 2.0)).norm() <= 1e-6);
}

TEST_CASE("objective value") {
  Vector y(2), w(2);
  y << 1, 1;
  w << 1, 0;
  CHECK(tikhonov_objective(LinearOperator::identity(2), Bias::l1(), y, 2.0, w) == 3.0);
}

TEST_CASE("large lambda gives the zero solution") {
  auto rng = rng_for(2);
  const auto X = LinearOperator::dense(gaussian_matrix(rng, 10, 20));
  const Vector y = gaussian_vector(rng, 10);
  const double lmax = X.adjoint(y).lpNorm<Eigen::Infinity>();
  CHECK(solve_tikhonov(X, Bias::l1(), y, 2.0 * lmax * 1.0001, Vector::Zero(20)).w.norm() == 0.0);
  // at lambda_max itself the solution is small but no larger than at lambda_max / 2
  const auto at_max = solve_tikhonov(X, Bias::l1(), y, lmax, Vector::Zero(20));
  const auto at_half = solve_tikhonov(X, Bias::l1(), y, lmax / 2.0, Vector::Zero(20));
  CHECK(at_max.w.norm() <= at_half.w.norm());
}

TEST_CASE("small lambda approaches basis pursuit") {
  RowMatrix m(2, 3);
  m << 1, 0, 1, 0, 1, 1;
  Vector y(2);
  y << 1, 1;
  const auto X = LinearOperator::dense(m);
  const auto oracle = testing_support::brute_force_bp(m, y);
  REQUIRE(oracle.has_value());
  // follow the path down to 1e-6 lambda_max; a cold start at that lambda crawls along the null space
  const auto grid = lambda_grid(X, y, 61, 6.0);
  const auto path = lasso_path(X, y, grid, 1e-12, 1000000);
  CHECK(grid.back() == doctest::Approx(1e-6 * X.adjoint(y).lpNorm<Eigen::Infinity>()));
  CHECK((path.solutions.back() - oracle->w).norm() <= 1e-3);
}

TEST_CASE("path solutions are prox-gradient fixed points") {
  auto rng = rng_for(3);
  const auto X = LinearOperator::dense(gaussian_matrix(rng, 15, 30));
  const Vector y = gaussian_vector(rng, 15, 3.0);
  const auto grid = lambda_grid(X, y, 20, 2.0);
  const double tol = 1e-8;
  const auto path = lasso_path(X, y, grid, tol);
  const double L = std::pow(kNormSafetyFactor * op_norm(X), 2);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const Vector& w = path.solutions[t];
    CHECK(path.converged[t]);
    const Vector next = Bias::l1().prox(grid[t] / (2.0 * L), w - X.adjoint(X.apply(w) - y) / L);
    CHECK((next - w).norm() <= tol * (1.0 + w.norm()));
  }
}

TEST_CASE("path is monotone in lambda") {
  auto rng = rng_for(4);
  const auto X = LinearOperator::dense(gaussian_matrix(rng, 20, 40));
  const Vector y = gaussian_vector(rng, 20, 3.0);
  const auto grid = lambda_grid(X, y, 30, 2.0);
  const auto path = lasso_path(X, y, grid, 1e-10);
  for (std::size_t t = 1; t < grid.size(); ++t) {
    const Vector &a = path.solutions[t - 1], &b = path.solutions[t];
    CHECK(b.lpNorm<1>() >= a.lpNorm<1>() - 1e-6);
    CHECK((y - X.apply(b)).norm() <= (y - X.apply(a)).norm() + 1e-6);
  }
}

TEST_CASE("warm starts cost no more than cold starts over several seeds") {
  // single instances can go either way near the interpolation end of the grid
  long warm_total = 0, cold_total = 0;
  int warm_wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rng = rng_for(100 + seed);
    const auto X = LinearOperator::dense(gaussian_matrix(rng, 20, 40));
    const Vector y = gaussian_vector(rng, 20, 3.0);
    const auto grid = lambda_grid(X, y, 25, 2.0);
    const auto warm = lasso_path(X, y, grid, 1e-8, 100000, Bias::l1(), true);
    const auto cold = lasso_path(X, y, grid, 1e-8, 100000, Bias::l1(), false);
    long w = 0, c = 0;
    for (auto it : warm.inner_iters) w += it;
    for (auto it : cold.inner_iters) c += it;
    warm_total += w;
    cold_total += c;
    if (w <= c) ++warm_wins;
  }
  CHECK(warm_total <= cold_total);
  CHECK(warm_wins >= 3);
}

TEST_CASE("baseline contract violations") {
  const auto I = LinearOperator::identity(2);
  CHECK_THROWS_AS(solve_tikhonov(I, Bias::l1(), Vector::Ones(2), 0.0, Vector::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(lasso_path(I, Vector::Ones(2), {0.1, 0.2}), ContractViolation);
}
