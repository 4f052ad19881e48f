#pragma once

#include <filesystem>
#include <vector>

#include "iterreg/bias.hpp"
#include "iterreg/linop.hpp"

namespace iterreg {

/// lambda_t = 10^(-span_decades * t / (count - 1)) * ||X^T y||_inf, t = 0..count-1.
std::vector<double> lambda_grid(const LinearOperator& X, const Vector& y, int count = 100,
                                double span_decades = 3.0);

/// lambda J(w) + ||y - X w||^2 (no 1/2 on the data term).
double tikhonov_objective(const LinearOperator& X, const Bias& J, const Vector& y, double lambda,
                          const Vector& w);

struct TikhonovResult {
  Vector w;
  long iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// Proximal gradient with step = 1/L, L = (1.01 op_norm(X))^2:
///   w <- prox_{(lambda step / 2) J}(w - step X^T (X w - y))
/// until ||w_next - w|| <= tol (1 + ||w||). On hitting max_iter the last
/// iterate is returned with converged = false. Pass norm_bound > 0 to reuse
/// a known upper bound on ||X||.
TikhonovResult solve_tikhonov(const LinearOperator& X, const Bias& J, const Vector& y, double lambda,
                              const Vector& w_init, double tol = 1e-8, long max_iter = 100000,
                              double norm_bound = 0.0);

struct PathResult {
  std::vector<double> lambdas;
  std::vector<Vector> solutions;
  std::vector<long> inner_iters;
  std::vector<double> objectives;
  std::vector<bool> converged;
};

/// Solves along a strictly decreasing grid, warm-starting each problem from
/// the previous solution (cold starts from zero when warm_start is false).
PathResult lasso_path(const LinearOperator& X, const Vector& y, const std::vector<double>& grid,
                      double tol = 1e-8, long max_iter = 100000, const Bias& J = Bias::l1(),
                      bool warm_start = true);

/// lambda,inner_iters,objective,nnz
void write_path_csv(const std::filesystem::path& path, const PathResult& result);

}  // namespace iterreg
