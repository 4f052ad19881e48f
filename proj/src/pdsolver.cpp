#include "iterreg/pdsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "iterreg/error.hpp"
#include "iterreg/metrics.hpp"

namespace iterreg {

namespace {

void check_steps(double epsilon, double tau, double sigma, double norm_bound) {
  require(epsilon > 0.0 && epsilon < 1.0, "solver config: epsilon must lie in (0, 1)");
  require(tau > 0.0 && sigma > 0.0, "solver config: tau and sigma must be positive");
  const double product = sigma * tau * norm_bound * norm_bound;
  if (product > epsilon * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "solver config: sigma*tau*||X||^2 = " << product << " exceeds epsilon = " << epsilon;
    throw ContractViolation(msg.str());
  }
}

}  // namespace

SolverConfig SolverConfig::symmetric(const LinearOperator& X, double epsilon) {
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.norm_bound = kNormSafetyFactor * op_norm(X);
  require(cfg.norm_bound > 0.0, "solver config: zero operator");
  cfg.tau = cfg.sigma = std::sqrt(epsilon) / cfg.norm_bound;
  cfg.validate();
  return cfg;
}

SolverConfig SolverConfig::with_steps(const LinearOperator& X, double epsilon, double tau, double sigma) {
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.tau = tau;
  cfg.sigma = sigma;
  cfg.norm_bound = kNormSafetyFactor * op_norm(X);
  cfg.validate();
  return cfg;
}

void SolverConfig::validate() const {
  check_steps(epsilon, tau, sigma, norm_bound);
  require(max_iter >= 0, "solver config: max_iter must be nonnegative");
  require(record_every >= 1, "solver config: record_every must be >= 1");
}

PdState PdState::initial(Vector w0, Vector theta0) {
  PdState s;
  s.w_avg = Vector::Zero(w0.size());
  s.theta_avg = Vector::Zero(theta0.size());
  s.w = std::move(w0);
  s.theta_prev = theta0;
  s.theta = std::move(theta0);
  return s;
}

PdState PdState::zeros(std::size_t p, std::size_t n) {
  return initial(Vector::Zero(p), Vector::Zero(n));
}

SaddleCertificate SaddleCertificate::from_pair(const LinearOperator& X, const Bias& J, const Vector& y,
                                               Vector w, Vector theta, double support_tol) {
  require(static_cast<std::size_t>(w.size()) == X.in_dim() &&
              static_cast<std::size_t>(theta.size()) == X.out_dim() &&
              static_cast<std::size_t>(y.size()) == X.out_dim(),
          "certificate: dimension mismatch");
  SaddleCertificate c;
  c.residual = X.apply(w) - y;
  c.neg_adj_theta = -X.adjoint(theta);
  c.feas_res = c.residual.norm();
  c.subgrad_res = J.subgradient_residual(w, c.neg_adj_theta, support_tol);
  c.j_star = J.eval(w);
  c.y = y;
  c.w_star = std::move(w);
  c.theta_star = std::move(theta);
  return c;
}

Vector step_inplace(PdState& s, const LinearOperator& X, const Bias& J, const Vector& y_obs,
                    const SolverConfig& cfg) {
  const Vector extrapolated = 2.0 * s.theta - s.theta_prev;
  s.w = J.prox(cfg.tau, s.w - cfg.tau * X.adjoint(extrapolated));
  Vector xw = X.apply(s.w);
  s.theta_prev = s.theta;
  s.theta += cfg.sigma * (xw - y_obs);
  s.k += 1;
  const double inv_k = 1.0 / static_cast<double>(s.k);
  s.w_avg += inv_k * (s.w - s.w_avg);
  s.theta_avg += inv_k * (s.theta - s.theta_avg);
  if (!s.w.allFinite() || !s.theta.allFinite()) {
    throw NumericalFailure("primal-dual iteration " + std::to_string(s.k) + " produced non-finite values");
  }
  return xw;
}

PdState step(PdState state, const LinearOperator& X, const Bias& J, const Vector& y_obs,
             const SolverConfig& cfg) {
  step_inplace(state, X, J, y_obs, cfg);
  return state;
}

namespace {

void check_run_dims(const LinearOperator& X, const Vector& y_obs, const PdState& s) {
  require(static_cast<std::size_t>(y_obs.size()) == X.out_dim(), "run: data length does not match operator");
  require(static_cast<std::size_t>(s.w.size()) == X.in_dim() &&
              static_cast<std::size_t>(s.theta.size()) == X.out_dim() &&
              static_cast<std::size_t>(s.theta_prev.size()) == X.out_dim(),
          "run: state dimensions do not match operator");
}

}  // namespace

IterateLog run(const LinearOperator& X, const Bias& J, const Vector& y_obs, const SolverConfig& cfg,
               const RunOptions& options) {
  cfg.validate();
  IterateLog log;
  PdState s = options.initial ? *options.initial : PdState::zeros(X.in_dim(), X.out_dim());
  check_run_dims(X, y_obs, s);
  if (s.w_avg.size() != s.w.size()) s.w_avg = Vector::Zero(s.w.size());
  if (s.theta_avg.size() != s.theta.size()) s.theta_avg = Vector::Zero(s.theta.size());
  const Vector& y_clean = options.y_clean ? *options.y_clean : y_obs;
  require(y_clean.size() == y_obs.size(), "run: clean and observed data lengths differ");
  const SaddleCertificate* ref = options.reference;
  if (ref) {
    require(ref->w_star.size() == s.w.size() && ref->theta_star.size() == s.theta.size(),
            "run: reference certificate dimensions do not match");
  }

  auto record = [&](const Vector& xw) {
    LogRow row;
    row.k = s.k;
    row.res_clean = (xw - y_clean).norm();
    row.res_noisy = (xw - y_obs).norm();
    row.j_val = J.eval(s.w);
    if (ref) {
      row.dist_ref = (s.w - ref->w_star).norm();
      row.gap = gap_from_image(s.w, xw, s.theta, *ref, J);
      row.bregman = cert_bregman(J, s.w, *ref);
    }
    if (options.log_averages && s.k >= 1) {
      const Vector xw_avg = X.apply(s.w_avg);
      row.res_avg_clean = (xw_avg - y_clean).norm();
      if (ref) {
        row.dist_avg_ref = (s.w_avg - ref->w_star).norm();
        row.gap_avg = gap_from_image(s.w_avg, xw_avg, s.theta_avg, *ref, J);
      }
    }
    log.rows.push_back(row);
  };

  record(X.apply(s.w));
  for (long it = 1; it <= cfg.max_iter; ++it) {
    const Vector xw = step_inplace(s, X, J, y_obs, cfg);
    if (options.on_step) options.on_step(s, xw);
    if (it % cfg.record_every == 0 || it == cfg.max_iter) record(xw);
  }
  log.final_state = std::move(s);
  return log;
}

namespace {

/// Exact solve of the optimality system restricted to the support of w:
/// X_S w_S = y with sign(w_S) kept, and theta projected onto
/// {theta : X_S^T theta = -sign(w_S)}.
std::optional<SaddleCertificate> polish_l1(const LinearOperator& X, const Bias& J, const Vector& y,
                                           const Vector& w, const Vector& theta, double support_tol) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) support.push_back(j);
  const auto n = static_cast<Eigen::Index>(X.out_dim());
  const auto s = static_cast<Eigen::Index>(support.size());
  if (s > n) return std::nullopt;

  Vector w_star = Vector::Zero(w.size());
  Vector theta_star = theta;
  if (s > 0) {
    Eigen::MatrixXd xs(n, s);
    Vector unit = Vector::Zero(w.size());
    for (Eigen::Index c = 0; c < s; ++c) {
      const auto j = support[c];
      if (X.kind() == OpKind::Dense) {
        xs.col(c) = X.matrix().col(j);
      } else {
        unit[j] = 1.0;
        xs.col(c) = X.apply(unit);
        unit[j] = 0.0;
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    if (qr.rank() < s) return std::nullopt;
    const Vector ws = qr.solve(y);
    Vector signs(s);
    for (Eigen::Index c = 0; c < s; ++c) {
      const double current = w[support[c]];
      if (ws[c] == 0.0 || std::signbit(ws[c]) != std::signbit(current)) return std::nullopt;
      signs[c] = std::copysign(1.0, current);
      w_star[support[c]] = ws[c];
    }
    const Eigen::MatrixXd gram = xs.transpose() * xs;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Vector mismatch = xs.transpose() * theta + signs;
    theta_star = theta - xs * ldlt.solve(mismatch);
  }
  return SaddleCertificate::from_pair(X, J, y, std::move(w_star), std::move(theta_star), support_tol);
}

}  // namespace

SaddleCertificate certify(const LinearOperator& X, const Bias& J, const Vector& y, const SolverConfig& cfg,
                          const CertifyOptions& options) {
  cfg.validate();
  require(static_cast<std::size_t>(y.size()) == X.out_dim(), "certify: data length does not match operator");
  require(options.subgrad_tol > 0.0 && options.check_every >= 1 && options.max_iter >= 0,
          "certify: invalid options");
  const double feas_tol = options.feas_tol > 0.0 ? options.feas_tol : 1e-9 * std::max(1.0, y.norm());
  const double subgrad_tol = options.subgrad_tol;
  const bool try_polish = options.polish && J.kind() == BiasKind::L1;

  PdState s = PdState::zeros(X.in_dim(), X.out_dim());
  double feas = std::numeric_limits<double>::infinity();
  double subgrad = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= options.max_iter; ++it) {
    const Vector xw = step_inplace(s, X, J, y, cfg);
    if (it % options.check_every != 0 && it != options.max_iter) continue;
    feas = (xw - y).norm();
    subgrad = J.subgradient_residual(s.w, -X.adjoint(s.theta), subgrad_tol);
    if (try_polish) {
      if (auto polished = polish_l1(X, J, y, s.w, s.theta, subgrad_tol)) {
        if (polished->feas_res <= feas_tol && polished->subgrad_res <= subgrad_tol) {
          polished->iterations = it;
          return *std::move(polished);
        }
      }
    }
    if (feas <= feas_tol && subgrad <= subgrad_tol) {
      auto cert = SaddleCertificate::from_pair(X, J, y, s.w, s.theta, subgrad_tol);
      cert.iterations = it;
      return cert;
    }
  }
  std::ostringstream msg;
  msg << "certify: tolerances not reached after " << options.max_iter << " iterations (feas_res = " << feas
      << " vs " << feas_tol << ", subgrad_res = " << subgrad << " vs " << subgrad_tol << ")";
  throw CertificationFailure(msg.str());
}

}  // namespace iterreg
