#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iterreg/pdsolver.hpp"
#include "iterreg/problems.hpp"

namespace iterreg {

struct SparseParams {
  std::size_t n = 200;
  std::size_t p = 500;
  std::size_t s = 75;
  double corr = 0.2;
  double y_norm = 20.0;
};

struct MatcompParams {
  std::size_t d = 20;
  std::size_t r = 5;
  std::size_t denom = 5;
  double y_norm = 20.0;
};

/// Held-out comparison of the early-stopped path against the Lasso path.
struct PathParams {
  std::size_t n = 400;
  std::size_t p = 800;
  std::size_t s = 40;
  double corr = 0.2;
  double y_norm = 20.0;
  double noise = 4.0;  // ||y_obs - X w0|| over all n rows
  std::size_t folds = 4;
  int grid_count = 100;
  double span_decades = 3.0;
  double lasso_tol = 1e-6;
  long lasso_max_iter = 100000;
};

/// Piecewise-constant side x side image observed through a Gaussian matrix
/// with round(ratio * side^2) rows.
struct TvParams {
  std::size_t side = 16;
  double ratio = 0.5;
};

struct ExperimentSpec {
  std::string name;  // semiconv | stoptime | bounds | pathcmp | matcomp | tv-demo | solve
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";

  SparseParams sparse;
  MatcompParams matcomp;
  PathParams path;
  TvParams tv;

  double epsilon = 0.99;
  std::vector<double> epsilons;   // bounds sweep; empty means {0.25, 0.5, 0.9}
  std::optional<long> max_iter;   // per-experiment default when unset
  long record_every = 1;
  std::vector<double> deltas;     // per-experiment default when empty
  int replicates = 10;
  unsigned threads = 0;           // 0: hardware concurrency

  // solve only
  std::optional<std::filesystem::path> problem_dir;
  std::string bias = "l1";        // l1 | sq_l2 | nuclear
  std::string stop_rule = "none"; // none | oracle | discrepancy | budget
  double rule_param = 0.0;        // tau_d or c; 0 selects the rule default

  /// Throws ContractViolation on replicates < 1, negative deltas, etc.
  void validate() const;
};

struct CurveSummary {
  double delta = 0.0;
  int replicate = 0;
  std::uint64_t noise_seed = 0;
  long k_star = 0;
  double d_first = 0.0;
  double d_min = 0.0;
  double d_last = 0.0;
  /// Minimum index strictly between the first and last recorded ones.
  bool interior_index = false;
  /// d_min <= (1 - margin) * min(d_first, d_last).
  bool has_interior_min(double margin) const;
};

struct SemiconvResult {
  SaddleCertificate cert;
  std::vector<CurveSummary> curves;  // delta-major, then replicate
  std::vector<double> deltas;
  std::vector<double> mean_min;      // mean of d_min per delta
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
};

/// Least-squares line and Pearson correlation; nullopt when x or y has no spread.
std::optional<LinearFit> fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct StoptimeResult {
  std::vector<double> deltas;
  std::vector<double> mean_inv_k;
  std::vector<double> mean_k;
  std::vector<CurveSummary> runs;
  std::optional<LinearFit> fit;
  /// |intercept| relative to the fitted value range over the delta span.
  std::optional<double> relative_intercept;
};

struct BoundsCase {
  double epsilon = 0.0;
  double delta = 0.0;
  int replicate = 0;
  double max_gap_ratio = 0.0;   // max_k measured / bound
  double max_feas_ratio = 0.0;
  long violations = 0;
};

struct BoundsResult {
  std::vector<BoundsCase> cases;
  long violations = 0;
};

struct PathcmpResult {
  std::vector<double> cp_mse;     // fold mean, index k
  std::vector<double> lasso_mse;  // fold mean, index t
  std::vector<double> lambda_ratio;
  long cp_best_k = 0;
  double cp_best_mse = 0.0;
  int lasso_best_t = 0;
  double lasso_best_mse = 0.0;
  long cp_iters_to_best = 0;      // summed over folds
  long path_iters_to_best = 0;    // summed over folds, t = 0..lasso_best_t
  long path_iters_total = 0;
  double zero_mse = 0.0;
};

struct TvResult {
  long k_best = 0;
  double d_first = 0.0;
  double d_min = 0.0;
  double d_last = 0.0;
  double tv_truth = 0.0;
  double tv_best = 0.0;
};

struct SolveResult {
  IterateLog log;
  Vector w;
  std::optional<long> stop_k;
};

/// Shared-problem helpers, also used by the acceptance suite.
std::uint64_t noise_seed(std::uint64_t seed, std::size_t delta_index, int replicate);
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// ||w_k - w_ref|| at k = 0 and every record_every-th step (plus the last).
std::vector<std::pair<long, double>> distance_curve(const LinearOperator& X, const Bias& J,
                                                     const Vector& y_obs, const SolverConfig& cfg,
                                                     const Vector& w_ref);

SemiconvResult run_semiconv(const ExperimentSpec& spec);
StoptimeResult run_stoptime(const ExperimentSpec& spec);
/// Writes the CSV first, then throws BoundViolation if any bound failed
/// beyond 1e-8 relative.
BoundsResult run_bounds(const ExperimentSpec& spec);
PathcmpResult run_pathcmp(const ExperimentSpec& spec);
SemiconvResult run_matcomp(const ExperimentSpec& spec);
TvResult run_tv_demo(const ExperimentSpec& spec);
SolveResult run_solve(const ExperimentSpec& spec);

/// JSON options (keys mirror ExperimentSpec fields) merged over defaults.
ExperimentSpec spec_from_json(const std::string& name, const std::string& options_json);
/// Dispatches on spec.name and returns a JSON summary of the result.
std::string run_experiment(const ExperimentSpec& spec);

}  // namespace iterreg
