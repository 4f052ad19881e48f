#pragma once

#include <cstddef>
#include <vector>

#include "iterreg/bias.hpp"
#include "iterreg/linop.hpp"
#include "iterreg/pdsolver.hpp"

namespace iterreg {

/// L(w, theta) = J(w) + <theta, Xw - y>. Metrics always use the clean y.
double lagrangian(const Vector& w, const Vector& theta, const LinearOperator& X, const Bias& J,
                  const Vector& y);

/// L(w, theta*) - L(w*, theta). Values in (-clamp, 0) with
/// clamp = 1e-10 (1 + |L(w*, theta*)|) are returned as 0; anything more
/// negative throws CertificateInvalid.
double gap(const Vector& w, const Vector& theta, const SaddleCertificate& cert,
           const LinearOperator& X, const Bias& J, const Vector& y);

/// Same as gap() with X w supplied by the caller.
double gap_from_image(const Vector& w, const Vector& xw, const Vector& theta,
                      const SaddleCertificate& cert, const Bias& J);

/// D_J^g(w, w_ref) = J(w) - J(w_ref) - <g, w - w_ref>. g must pass
/// subgradient_check at `subgrad_tol`; tiny negative values are clamped to 0.
double bregman(const Bias& J, const Vector& w, const Vector& w_ref, const Vector& g_ref,
               double subgrad_tol = 1e-6);

/// Bregman divergence at the certificate, D_J^{-X^T theta*}(w, w*), without
/// re-checking the subgradient.
double cert_bregman(const Bias& J, const Vector& w, const SaddleCertificate& cert);

/// |[L(w, theta*) - L(w*, theta')] - D_J^{-X^T theta*}(w, w*)| <= tol. The theta'
/// term multiplies X w* - y, so any theta' may be passed (defaults to theta*).
bool gap_equals_bregman_check(const Vector& w, const SaddleCertificate& cert, const LinearOperator& X,
                              const Bias& J, const Vector& y, double tol,
                              const Vector* theta_any = nullptr);

/// Raw (unclamped) difference used by gap_equals_bregman_check.
double gap_bregman_discrepancy(const Vector& w, const SaddleCertificate& cert, const LinearOperator& X,
                               const Bias& J, const Vector& y, const Vector* theta_any = nullptr);

/// V(w, theta) = ||w||^2 / (2 tau) + ||theta||^2 / (2 sigma).
double weighted_v(const Vector& w, const Vector& theta, double tau, double sigma);

/// V(z0 - z*) for a run started at (w0, theta0).
double initial_v(const Vector& w0, const Vector& theta0, const SaddleCertificate& cert, double tau,
                 double sigma);

struct BoundInputs {
  double v0 = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
};

/// (sqrt(V0) + sqrt(2 sigma) delta k)^2 / k; V0 / k when delta = 0.
double stability_gap_bound(long k, const BoundInputs& b);

/// 2(1+eps)/(sigma eps (1-eps)) * [sqrt(2 sigma V0) delta + sigma eps delta^2/(1-eps)
///                                  + 2 sigma delta^2 k + V0 / k]
double stability_feas_bound(long k, const BoundInputs& b);

struct GrasmairData {
  std::vector<std::size_t> gamma_set;
  double m = 0.0;
  double xg_pinv_norm = 0.0;  // 1 / sigma_min(X_Gamma)
  double x_norm = 0.0;        // ||X||, exact (dense SVD)
};

/// Active set Gamma = {j : |X_j^T theta*| >= 1 - active_tol} and the constants of
/// the l1 distance bound. Throws CertificateInvalid when some |X_j^T theta*|
/// exceeds 1 + active_tol and AssumptionViolated when X_Gamma is not injective.
GrasmairData grasmair_data(const LinearOperator& X, const SaddleCertificate& cert,
                           double active_tol = 1e-6);

/// ||X_Gamma^{-1}|| ||Xw - y|| + (1 + ||X_Gamma^{-1}|| ||X||)/(1 - m) D(w, w*).
double grasmair_bound(const Vector& w, const SaddleCertificate& cert, const GrasmairData& gd,
                      const LinearOperator& X, const Bias& J, const Vector& y);

}  // namespace iterreg
