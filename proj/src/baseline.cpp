#include "iterreg/baseline.hpp"

#include <cmath>

#include "iterreg/csv.hpp"
#include "iterreg/error.hpp"

namespace iterreg {

std::vector<double> lambda_grid(const LinearOperator& X, const Vector& y, int count, double span_decades) {
  require(count >= 2, "lambda_grid: count must be >= 2");
  require(span_decades > 0.0, "lambda_grid: span must be positive");
  const double lambda_max = X.adjoint(y).lpNorm<Eigen::Infinity>();
  require(lambda_max > 0.0, "lambda_grid: X^T y = 0 gives an empty grid");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t)
    grid[static_cast<std::size_t>(t)] = std::pow(10.0, -span_decades * t / (count - 1)) * lambda_max;
  return grid;
}

double tikhonov_objective(const LinearOperator& X, const Bias& J, const Vector& y, double lambda,
                          const Vector& w) {
  return lambda * J.eval(w) + (y - X.apply(w)).squaredNorm();
}

TikhonovResult solve_tikhonov(const LinearOperator& X, const Bias& J, const Vector& y, double lambda,
                              const Vector& w_init, double tol, long max_iter, double norm_bound) {
  require(lambda > 0.0, "solve_tikhonov: lambda must be positive");
  require(tol > 0.0 && max_iter >= 1, "solve_tikhonov: invalid stopping parameters");
  require(static_cast<std::size_t>(w_init.size()) == X.in_dim(), "solve_tikhonov: bad initial point");
  const double bound = norm_bound > 0.0 ? norm_bound : kNormSafetyFactor * op_norm(X);
  require(bound > 0.0, "solve_tikhonov: zero operator");
  const double step = 1.0 / (bound * bound);

  TikhonovResult res;
  res.w = w_init;
  for (long it = 1; it <= max_iter; ++it) {
    Vector next = J.prox(0.5 * lambda * step, res.w - step * X.adjoint(X.apply(res.w) - y));
    const double moved = (next - res.w).norm();
    const double scale = 1.0 + res.w.norm();
    res.w = std::move(next);
    res.iterations = it;
    if (!res.w.allFinite()) throw NumericalFailure("solve_tikhonov: iteration " + std::to_string(it) + " diverged");
    if (moved <= tol * scale) {
      res.converged = true;
      break;
    }
  }
  res.objective = tikhonov_objective(X, J, y, lambda, res.w);
  return res;
}

PathResult lasso_path(const LinearOperator& X, const Vector& y, const std::vector<double>& grid, double tol,
                      long max_iter, const Bias& J, bool warm_start) {
  require(!grid.empty(), "lasso_path: empty grid");
  for (std::size_t t = 1; t < grid.size(); ++t)
    require(grid[t] < grid[t - 1], "lasso_path: grid must be strictly decreasing");
  const double bound = kNormSafetyFactor * op_norm(X);
  PathResult path;
  Vector w = Vector::Zero(static_cast<Eigen::Index>(X.in_dim()));
  for (double lambda : grid) {
    const Vector start = warm_start ? w : Vector::Zero(w.size());
    auto res = solve_tikhonov(X, J, y, lambda, start, tol, max_iter, bound);
    w = res.w;
    path.lambdas.push_back(lambda);
    path.solutions.push_back(std::move(res.w));
    path.inner_iters.push_back(res.iterations);
    path.objectives.push_back(res.objective);
    path.converged.push_back(res.converged);
  }
  return path;
}

void write_path_csv(const std::filesystem::path& path, const PathResult& result) {
  CsvTable table({"lambda", "inner_iters", "objective", "nnz"});
  for (std::size_t t = 0; t < result.lambdas.size(); ++t) {
    const auto nnz = (result.solutions[t].array() != 0.0).count();
    table.add_numbers({result.lambdas[t], double(result.inner_iters[t]), result.objectives[t], double(nnz)});
  }
  table.write(path);
}

}  // namespace iterreg
