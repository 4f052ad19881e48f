#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "iterreg/bias.hpp"
#include "iterreg/linop.hpp"

namespace iterreg {

/// Step sizes and run length for the primal-dual iteration
///
///   w_{k+1}     = prox_{tau J}(w_k - tau X^T (2 theta_k - theta_{k-1}))
///   theta_{k+1} = theta_k + sigma (X w_{k+1} - y_obs)
///
/// Construct through symmetric() or with_steps(); both enforce
/// sigma * tau * norm_bound^2 <= epsilon where norm_bound = 1.01 * op_norm(X).
struct SolverConfig {
  double epsilon = 0.99;
  double tau = 0.0;
  double sigma = 0.0;
  long max_iter = 1000;
  std::uint64_t seed = 0;  // reserved; the iteration itself is deterministic
  long record_every = 1;
  double norm_bound = 0.0;

  /// tau = sigma = sqrt(epsilon) / norm_bound.
  static SolverConfig symmetric(const LinearOperator& X, double epsilon = 0.99);
  static SolverConfig with_steps(const LinearOperator& X, double epsilon, double tau, double sigma);

  /// Re-checks the invariants against the stored norm bound.
  void validate() const;
};

struct PdState {
  Vector w;
  Vector theta;
  Vector theta_prev;
  long k = 0;
  Vector w_avg;      // mean of w_1..w_k; zero at k = 0
  Vector theta_avg;  // mean of theta_1..theta_k

  /// w = w0, theta = theta_prev = theta0.
  static PdState initial(Vector w0, Vector theta0);
  static PdState zeros(std::size_t p, std::size_t n);
};

/// Numerically converged saddle point of L(w, theta) = J(w) + <theta, Xw - y>
/// on clean data, together with cached quantities used by every metric.
struct SaddleCertificate {
  Vector w_star;
  Vector theta_star;
  double feas_res = 0.0;     // ||X w* - y||
  double subgrad_res = 0.0;  // subgradient residual of -X^T theta* at w*
  long iterations = 0;       // primal-dual steps spent reaching it

  Vector y;                 // clean data it certifies
  Vector residual;          // X w* - y
  Vector neg_adj_theta;     // -X^T theta*
  double j_star = 0.0;      // J(w*)

  /// Fills the cached fields and residuals for an arbitrary pair.
  static SaddleCertificate from_pair(const LinearOperator& X, const Bias& J, const Vector& y,
                                     Vector w, Vector theta, double support_tol);
};

struct LogRow {
  long k = 0;
  double res_clean = 0.0;
  double res_noisy = 0.0;
  double j_val = 0.0;
  std::optional<double> dist_ref;
  std::optional<double> gap;
  std::optional<double> bregman;
  std::optional<double> res_avg_clean;
  std::optional<double> dist_avg_ref;
  std::optional<double> gap_avg;
};

struct IterateLog {
  std::vector<LogRow> rows;
  PdState final_state;
};

/// One primal-dual update in place; returns X w_{k+1}. Throws
/// NumericalFailure naming the iteration if the state stops being finite.
Vector step_inplace(PdState& state, const LinearOperator& X, const Bias& J, const Vector& y_obs,
                  const SolverConfig& cfg);

PdState step(PdState state, const LinearOperator& X, const Bias& J, const Vector& y_obs,
             const SolverConfig& cfg);

struct RunOptions {
  /// Clean data for res_clean; defaults to y_obs.
  const Vector* y_clean = nullptr;
  /// When set, distance and gap columns are logged against it (and its clean y).
  const SaddleCertificate* reference = nullptr;
  std::optional<PdState> initial;
  /// Called after every step with the new state and X w_k.
  std::function<void(const PdState&, const Vector&)> on_step;
  /// Also log the averaged-iterate columns.
  bool log_averages = true;
};

/// Runs cfg.max_iter steps, logging k = 0, every record_every-th step and
/// the last step.
IterateLog run(const LinearOperator& X, const Bias& J, const Vector& y_obs, const SolverConfig& cfg,
               const RunOptions& options = {});

struct CertifyOptions {
  double feas_tol = -1.0;    // default 1e-9 * max(1, ||y||)
  double subgrad_tol = 1e-6;
  long max_iter = 200000;
  long check_every = 50;
  /// For l1 with a dense-materializable operator, finish by solving the
  /// support-restricted optimality system exactly once the support settles.
  bool polish = true;
};

/// Runs the iteration on clean y until ||X w - y|| <= feas_tol and
/// -X^T theta passes the subgradient check at subgrad_tol. Throws
/// CertificationFailure with the achieved residuals otherwise.
SaddleCertificate certify(const LinearOperator& X, const Bias& J, const Vector& y,
                          const SolverConfig& cfg, const CertifyOptions& options = {});

}  // namespace iterreg
