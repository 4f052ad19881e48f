#include "iterreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "iterreg/error.hpp"

namespace iterreg {

double lagrangian(const Vector& w, const Vector& theta, const LinearOperator& X, const Bias& J,
                  const Vector& y) {
  require(theta.size() == y.size(), "lagrangian: theta and y lengths differ");
  return J.eval(w) + theta.dot(X.apply(w) - y);
}

double gap_from_image(const Vector& w, const Vector& xw, const Vector& theta, const SaddleCertificate& cert,
                      const Bias& J) {
  require(w.size() == cert.w_star.size() && theta.size() == cert.theta_star.size() &&
              xw.size() == cert.y.size(),
          "gap: dimension mismatch with certificate");
  const double value = J.eval(w) + cert.theta_star.dot(xw - cert.y) - cert.j_star - theta.dot(cert.residual);
  if (value >= 0.0) return value;
  const double clamp = 1e-10 * (1.0 + std::abs(cert.j_star));
  if (value > -clamp) return 0.0;
  std::ostringstream msg;
  msg << "gap: value " << value << " is negative beyond " << -clamp
      << "; the certificate is not a saddle point of this problem";
  throw CertificateInvalid(msg.str());
}

double gap(const Vector& w, const Vector& theta, const SaddleCertificate& cert, const LinearOperator& X,
           const Bias& J, const Vector& y) {
  require(y.size() == cert.y.size() && (y - cert.y).lpNorm<Eigen::Infinity>() == 0.0,
          "gap: certificate was issued for different data");
  return gap_from_image(w, X.apply(w), theta, cert, J);
}

namespace {

double raw_bregman(const Bias& J, const Vector& w, const Vector& w_ref, double j_ref, const Vector& g_ref) {
  return J.eval(w) - j_ref - g_ref.dot(w - w_ref);
}

double clamp_small_negative(double value, double scale) {
  return (value < 0.0 && value > -1e-10 * (1.0 + scale)) ? 0.0 : value;
}

}  // namespace

double bregman(const Bias& J, const Vector& w, const Vector& w_ref, const Vector& g_ref, double subgrad_tol) {
  require(w.size() == w_ref.size() && w.size() == g_ref.size(), "bregman: dimension mismatch");
  if (!J.subgradient_check(w_ref, g_ref, subgrad_tol))
    throw ContractViolation("bregman: g_ref is not a subgradient of J at w_ref");
  const double j_ref = J.eval(w_ref);
  return clamp_small_negative(raw_bregman(J, w, w_ref, j_ref, g_ref), std::abs(j_ref));
}

double cert_bregman(const Bias& J, const Vector& w, const SaddleCertificate& cert) {
  require(w.size() == cert.w_star.size(), "bregman: dimension mismatch with certificate");
  return clamp_small_negative(raw_bregman(J, w, cert.w_star, cert.j_star, cert.neg_adj_theta),
                              std::abs(cert.j_star));
}

double gap_bregman_discrepancy(const Vector& w, const SaddleCertificate& cert, const LinearOperator& X,
                               const Bias& J, const Vector& y, const Vector* theta_any) {
  require(y.size() == cert.y.size(), "gap/bregman check: data length mismatch");
  const Vector& theta = theta_any ? *theta_any : cert.theta_star;
  const double jw = J.eval(w);
  const double gap_value = jw + cert.theta_star.dot(X.apply(w) - y) - cert.j_star -
                           theta.dot(X.apply(cert.w_star) - y);
  const double breg_value = raw_bregman(J, w, cert.w_star, cert.j_star, cert.neg_adj_theta);
  return gap_value - breg_value;
}

bool gap_equals_bregman_check(const Vector& w, const SaddleCertificate& cert, const LinearOperator& X,
                              const Bias& J, const Vector& y, double tol, const Vector* theta_any) {
  return std::abs(gap_bregman_discrepancy(w, cert, X, J, y, theta_any)) <= tol;
}

double weighted_v(const Vector& w, const Vector& theta, double tau, double sigma) {
  require(tau > 0.0 && sigma > 0.0, "weighted_v: tau and sigma must be positive");
  return w.squaredNorm() / (2.0 * tau) + theta.squaredNorm() / (2.0 * sigma);
}

double initial_v(const Vector& w0, const Vector& theta0, const SaddleCertificate& cert, double tau,
                 double sigma) {
  return weighted_v(w0 - cert.w_star, theta0 - cert.theta_star, tau, sigma);
}

namespace {

void check_bound_inputs(long k, const BoundInputs& b) {
  require(k >= 1, "bound: k must be >= 1");
  require(b.v0 >= 0.0 && b.sigma > 0.0 && b.delta >= 0.0, "bound: inputs must be nonnegative");
  require(b.epsilon > 0.0 && b.epsilon < 1.0, "bound: epsilon must lie in (0, 1)");
}

}  // namespace

double stability_gap_bound(long k, const BoundInputs& b) {
  check_bound_inputs(k, b);
  const double kk = static_cast<double>(k);
  const double root = std::sqrt(b.v0) + std::sqrt(2.0 * b.sigma) * b.delta * kk;
  return root * root / kk;
}

double stability_feas_bound(long k, const BoundInputs& b) {
  check_bound_inputs(k, b);
  const double kk = static_cast<double>(k);
  const double eps = b.epsilon;
  const double s = b.sigma;
  const double d = b.delta;
  const double bracket = std::sqrt(2.0 * s * b.v0) * d + s * eps / (1.0 - eps) * d * d + 2.0 * s * d * d * kk +
                         b.v0 / kk;
  return 2.0 * (1.0 + eps) / (s * eps * (1.0 - eps)) * bracket;
}

GrasmairData grasmair_data(const LinearOperator& X, const SaddleCertificate& cert, double active_tol) {
  require(active_tol > 0.0 && active_tol < 1.0, "grasmair_data: active_tol must lie in (0, 1)");
  require(cert.neg_adj_theta.size() == static_cast<Eigen::Index>(X.in_dim()),
          "grasmair_data: certificate does not match operator");
  const Vector corr = cert.neg_adj_theta.cwiseAbs();
  GrasmairData gd;
  for (Eigen::Index j = 0; j < corr.size(); ++j) {
    if (corr[j] > 1.0 + active_tol) {
      std::ostringstream msg;
      msg << "grasmair_data: |X_j^T theta*| = " << corr[j] << " > 1 at column " << j
          << "; theta* is not dual feasible for the l1 bias";
      throw CertificateInvalid(msg.str());
    }
    if (corr[j] >= 1.0 - active_tol) {
      gd.gamma_set.push_back(static_cast<std::size_t>(j));
    } else {
      gd.m = std::max(gd.m, corr[j]);
    }
  }
  if (gd.m >= 1.0 - active_tol) throw AssumptionViolated("grasmair_data: m is not below 1");

  const RowMatrix dense = X.to_dense();
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> full(dense);
    gd.x_norm = full.singularValues().size() > 0 ? full.singularValues()[0] : 0.0;
  }
  if (gd.gamma_set.empty()) return gd;
  if (gd.gamma_set.size() > X.out_dim()) {
    throw AssumptionViolated("grasmair_data: |Gamma| = " + std::to_string(gd.gamma_set.size()) +
                             " exceeds n, X_Gamma cannot be injective");
  }
  Eigen::MatrixXd xg(dense.rows(), static_cast<Eigen::Index>(gd.gamma_set.size()));
  for (std::size_t c = 0; c < gd.gamma_set.size(); ++c)
    xg.col(static_cast<Eigen::Index>(c)) = dense.col(static_cast<Eigen::Index>(gd.gamma_set[c]));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xg);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  if (!(smin > 1e-12 * smax)) {
    std::ostringstream msg;
    msg << "grasmair_data: X_Gamma is rank deficient (sigma_min = " << smin << ", sigma_max = " << smax << ")";
    throw AssumptionViolated(msg.str());
  }
  gd.xg_pinv_norm = 1.0 / smin;
  return gd;
}

double grasmair_bound(const Vector& w, const SaddleCertificate& cert, const GrasmairData& gd,
                      const LinearOperator& X, const Bias& J, const Vector& y) {
  require(J.kind() == BiasKind::L1, "grasmair_bound: bias must be l1");
  const double feas = (X.apply(w) - y).norm();
  const double breg = std::max(0.0, cert_bregman(J, w, cert));
  return gd.xg_pinv_norm * feas + (1.0 + gd.xg_pinv_norm * gd.x_norm) / (1.0 - gd.m) * breg;
}

}  // namespace iterreg
