#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace iterreg {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class OpKind { Dense, Identity, Mask, Grad2d, Stacked };

/// Zero-based (row, col) position in a p1 x p2 grid.
struct GridIndex {
  std::size_t row = 0;
  std::size_t col = 0;
};

/// One nonzero block of a block operator: rows `row_block`, columns
/// `col_block`, filled with `scale * children[child]`.
struct BlockEntry {
  std::size_t row_block = 0;
  std::size_t col_block = 0;
  std::size_t child = 0;
  double scale = 1.0;
};

struct BlockLayout {
  std::vector<std::size_t> row_dims;
  std::vector<std::size_t> col_dims;
  std::vector<BlockEntry> entries;
};

/// Immutable linear map R^in_dim -> R^out_dim. Copies share storage.
///
/// Matrices over R^{p1 x p2} are identified with row-major vectors of length
/// p1*p2, so the mask and gradient operators act on flattened grids.
class LinearOperator {
 public:
  static LinearOperator dense(RowMatrix matrix);
  static LinearOperator identity(std::size_t dim);
  /// Self-adjoint projector keeping the observed entries of a p1 x p2 grid.
  /// Duplicate indices are merged.
  static LinearOperator mask(std::size_t p1, std::size_t p2, std::vector<GridIndex> observed);
  /// Forward differences with replicate boundary: output is the vertical
  /// differences followed by the horizontal ones, each p1 x p2 row-major, with
  /// zero difference on the last row (resp. column).
  static LinearOperator grad2d(std::size_t p1, std::size_t p2);
  /// General block operator. Every child must match its block's dimensions.
  static LinearOperator stack(std::vector<LinearOperator> children, BlockLayout layout);
  /// Vertical concatenation [A; B; ...] of operators sharing in_dim.
  static LinearOperator vstack(std::vector<LinearOperator> children);

  OpKind kind() const;
  std::size_t in_dim() const;
  std::size_t out_dim() const;

  Vector apply(const Vector& w) const;
  Vector adjoint(const Vector& theta) const;

  /// Explicit out_dim x in_dim matrix.
  RowMatrix to_dense() const;

  // Kind-specific views; calling one for the wrong kind is a contract violation.
  const RowMatrix& matrix() const;
  std::size_t grid_rows() const;
  std::size_t grid_cols() const;
  /// Observed flat indices (row-major), sorted and unique.
  const std::vector<std::size_t>& observed() const;
  const std::vector<LinearOperator>& children() const;
  const BlockLayout& layout() const;

 private:
  struct Impl;
  explicit LinearOperator(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Power iteration on X^T X from a seeded Gaussian start. Returns an estimate
/// of the largest singular value, or 0 for the zero operator. The estimate
/// approaches the true norm from below; callers needing an upper bound apply
/// kNormSafetyFactor.
double op_norm(const LinearOperator& op, double tol = 1e-6, int max_iter = 5000,
               std::uint64_t seed = 0);

inline constexpr double kNormSafetyFactor = 1.01;

}  // namespace iterreg
