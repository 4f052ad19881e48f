#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "iterreg/linop.hpp"

namespace iterreg {

enum class BiasKind { Zero, L1, SqL2, Nuclear, Block };

class Bias;

/// Contiguous coordinate range [offset, offset + length).
struct IndexRange {
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Proper convex lsc functional J with a closed-form proximal map.
///
///   zero      J = 0
///   l1        J(w) = sum |w_i|
///   sq_l2     J(w) = alpha * ||w||^2   (alpha = 1/2 gives prox v / (1 + tau))
///   nuclear   J(W) = sum of singular values of the p1 x p2 row-major reshaping
///   block     separable sum of child biases over disjoint ranges covering [0, dim)
class Bias {
 public:
  static Bias zero();
  static Bias l1();
  static Bias sq_l2(double alpha = 0.5);
  static Bias nuclear(std::size_t p1, std::size_t p2);
  static Bias block(std::vector<std::pair<Bias, IndexRange>> parts);

  BiasKind kind() const;
  double alpha() const;
  std::size_t grid_rows() const;
  std::size_t grid_cols() const;
  /// Required vector length for nuclear and block kinds; 0 when any length is accepted.
  std::size_t fixed_dim() const;
  const std::vector<std::pair<Bias, IndexRange>>& parts() const;

  double eval(const Vector& w) const;

  /// argmin_x 1/2 ||x - v||^2 + tau J(x), tau >= 0.
  Vector prox(double tau, const Vector& v) const;

  /// Distance-like measure of how far g is from the subdifferential of J at w.
  /// For l1, coordinates with |w_i| <= tol count as off-support.
  double subgradient_residual(const Vector& w, const Vector& g, double tol) const;

  bool subgradient_check(const Vector& w, const Vector& g, double tol) const {
    return subgradient_residual(w, g, tol) <= tol;
  }

 private:
  struct Impl;
  explicit Bias(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Componentwise soft-thresholding; |v_i| <= tau maps to 0.
Vector soft_threshold(const Vector& v, double tau);

}  // namespace iterreg
