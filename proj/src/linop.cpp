#include "iterreg/linop.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <variant>

#include "iterreg/error.hpp"

namespace iterreg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct DenseData {
  RowMatrix matrix;
};
struct IdentityData {
  std::size_t dim;
};
struct MaskData {
  std::size_t p1, p2;
  std::vector<std::size_t> observed;
};
struct Grad2dData {
  std::size_t p1, p2;
};
struct StackedData {
  std::vector<LinearOperator> children;
  BlockLayout layout;
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> col_offsets;
};

std::vector<std::size_t> offsets_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> off(dims.size() + 1, 0);
  for (std::size_t i = 0; i < dims.size(); ++i) off[i + 1] = off[i] + dims[i];
  return off;
}

}  // namespace

struct LinearOperator::Impl {
  std::variant<DenseData, IdentityData, MaskData, Grad2dData, StackedData> data;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
};

LinearOperator::LinearOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

LinearOperator LinearOperator::dense(RowMatrix matrix) {
  require(matrix.rows() > 0 && matrix.cols() > 0, "dense operator: empty matrix");
  require(matrix.allFinite(), "dense operator: non-finite coefficient");
  auto impl = std::make_shared<Impl>();
  impl->out_dim = static_cast<std::size_t>(matrix.rows());
  impl->in_dim = static_cast<std::size_t>(matrix.cols());
  impl->data = DenseData{std::move(matrix)};
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::identity(std::size_t dim) {
  require(dim > 0, "identity operator: zero dimension");
  auto impl = std::make_shared<Impl>();
  impl->in_dim = impl->out_dim = dim;
  impl->data = IdentityData{dim};
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::mask(std::size_t p1, std::size_t p2, std::vector<GridIndex> observed) {
  require(p1 > 0 && p2 > 0, "mask operator: zero grid dimension");
  std::vector<std::size_t> flat;
  flat.reserve(observed.size());
  for (const auto& ij : observed) {
    require(ij.row < p1 && ij.col < p2,
            "mask operator: index (" + std::to_string(ij.row) + "," + std::to_string(ij.col) +
                ") outside " + std::to_string(p1) + "x" + std::to_string(p2) + " grid");
    flat.push_back(ij.row * p2 + ij.col);
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  auto impl = std::make_shared<Impl>();
  impl->in_dim = impl->out_dim = p1 * p2;
  impl->data = MaskData{p1, p2, std::move(flat)};
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::grad2d(std::size_t p1, std::size_t p2) {
  require(p1 > 0 && p2 > 0, "grad2d operator: zero grid dimension");
  auto impl = std::make_shared<Impl>();
  impl->in_dim = p1 * p2;
  impl->out_dim = 2 * p1 * p2;
  impl->data = Grad2dData{p1, p2};
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::stack(std::vector<LinearOperator> children, BlockLayout layout) {
  require(!layout.row_dims.empty() && !layout.col_dims.empty(), "stack: empty block layout");
  for (auto d : layout.row_dims) require(d > 0, "stack: zero row block");
  for (auto d : layout.col_dims) require(d > 0, "stack: zero column block");
  for (const auto& e : layout.entries) {
    require(e.row_block < layout.row_dims.size() && e.col_block < layout.col_dims.size(),
            "stack: block position out of range");
    require(e.child < children.size(), "stack: child index out of range");
    const auto& c = children[e.child];
    require(c.out_dim() == layout.row_dims[e.row_block] && c.in_dim() == layout.col_dims[e.col_block],
            "stack: child " + std::to_string(e.child) + " is " + std::to_string(c.out_dim()) + "x" +
                std::to_string(c.in_dim()) + " but block (" + std::to_string(e.row_block) + "," +
                std::to_string(e.col_block) + ") is " + std::to_string(layout.row_dims[e.row_block]) +
                "x" + std::to_string(layout.col_dims[e.col_block]));
  }
  auto impl = std::make_shared<Impl>();
  StackedData s{std::move(children), std::move(layout), {}, {}};
  s.row_offsets = offsets_of(s.layout.row_dims);
  s.col_offsets = offsets_of(s.layout.col_dims);
  impl->out_dim = s.row_offsets.back();
  impl->in_dim = s.col_offsets.back();
  impl->data = std::move(s);
  return LinearOperator(std::move(impl));
}

LinearOperator LinearOperator::vstack(std::vector<LinearOperator> children) {
  require(!children.empty(), "vstack: no children");
  BlockLayout layout;
  layout.col_dims = {children.front().in_dim()};
  for (std::size_t i = 0; i < children.size(); ++i) {
    require(children[i].in_dim() == children.front().in_dim(), "vstack: in_dim mismatch");
    layout.row_dims.push_back(children[i].out_dim());
    layout.entries.push_back({i, 0, i, 1.0});
  }
  return stack(std::move(children), std::move(layout));
}

OpKind LinearOperator::kind() const {
  return std::visit(Overloaded{[](const DenseData&) { return OpKind::Dense; },
                               [](const IdentityData&) { return OpKind::Identity; },
                               [](const MaskData&) { return OpKind::Mask; },
                               [](const Grad2dData&) { return OpKind::Grad2d; },
                               [](const StackedData&) { return OpKind::Stacked; }},
                    impl_->data);
}

std::size_t LinearOperator::in_dim() const { return impl_->in_dim; }
std::size_t LinearOperator::out_dim() const { return impl_->out_dim; }

Vector LinearOperator::apply(const Vector& w) const {
  require(static_cast<std::size_t>(w.size()) == in_dim(),
          "apply: input has length " + std::to_string(w.size()) + ", operator expects " +
              std::to_string(in_dim()));
  return std::visit(
      Overloaded{
          [&](const DenseData& d) -> Vector { return d.matrix * w; },
          [&](const IdentityData&) -> Vector { return w; },
          [&](const MaskData& m) -> Vector {
            Vector out = Vector::Zero(w.size());
            for (auto idx : m.observed) out[idx] = w[idx];
            return out;
          },
          [&](const Grad2dData& g) -> Vector {
            const std::size_t n = g.p1 * g.p2;
            Vector out = Vector::Zero(2 * n);
            for (std::size_t i = 0; i < g.p1; ++i) {
              for (std::size_t j = 0; j < g.p2; ++j) {
                const std::size_t at = i * g.p2 + j;
                if (i + 1 < g.p1) out[at] = w[at + g.p2] - w[at];
                if (j + 1 < g.p2) out[n + at] = w[at + 1] - w[at];
              }
            }
            return out;
          },
          [&](const StackedData& s) -> Vector {
            Vector out = Vector::Zero(out_dim());
            for (const auto& e : s.layout.entries) {
              const auto rows = s.layout.row_dims[e.row_block];
              const auto cols = s.layout.col_dims[e.col_block];
              Vector part = w.segment(s.col_offsets[e.col_block], cols);
              out.segment(s.row_offsets[e.row_block], rows) += e.scale * s.children[e.child].apply(part);
            }
            return out;
          }},
      impl_->data);
}

Vector LinearOperator::adjoint(const Vector& theta) const {
  require(static_cast<std::size_t>(theta.size()) == out_dim(),
          "adjoint: input has length " + std::to_string(theta.size()) + ", operator expects " +
              std::to_string(out_dim()));
  return std::visit(
      Overloaded{
          [&](const DenseData& d) -> Vector { return d.matrix.transpose() * theta; },
          [&](const IdentityData&) -> Vector { return theta; },
          [&](const MaskData& m) -> Vector {
            Vector out = Vector::Zero(theta.size());
            for (auto idx : m.observed) out[idx] = theta[idx];
            return out;
          },
          [&](const Grad2dData& g) -> Vector {
            const std::size_t n = g.p1 * g.p2;
            Vector out = Vector::Zero(n);
            for (std::size_t i = 0; i < g.p1; ++i) {
              for (std::size_t j = 0; j < g.p2; ++j) {
                const std::size_t at = i * g.p2 + j;
                if (i + 1 < g.p1) {
                  out[at + g.p2] += theta[at];
                  out[at] -= theta[at];
                }
                if (j + 1 < g.p2) {
                  out[at + 1] += theta[n + at];
                  out[at] -= theta[n + at];
                }
              }
            }
            return out;
          },
          [&](const StackedData& s) -> Vector {
            Vector out = Vector::Zero(in_dim());
            for (const auto& e : s.layout.entries) {
              const auto rows = s.layout.row_dims[e.row_block];
              const auto cols = s.layout.col_dims[e.col_block];
              Vector part = theta.segment(s.row_offsets[e.row_block], rows);
              out.segment(s.col_offsets[e.col_block], cols) += e.scale * s.children[e.child].adjoint(part);
            }
            return out;
          }},
      impl_->data);
}

RowMatrix LinearOperator::to_dense() const {
  if (kind() == OpKind::Dense) return matrix();
  RowMatrix out(out_dim(), in_dim());
  Vector unit = Vector::Zero(in_dim());
  for (std::size_t j = 0; j < in_dim(); ++j) {
    unit[j] = 1.0;
    out.col(j) = apply(unit);
    unit[j] = 0.0;
  }
  return out;
}

const RowMatrix& LinearOperator::matrix() const {
  const auto* d = std::get_if<DenseData>(&impl_->data);
  require(d != nullptr, "matrix(): operator is not dense");
  return d->matrix;
}

std::size_t LinearOperator::grid_rows() const {
  if (const auto* m = std::get_if<MaskData>(&impl_->data)) return m->p1;
  if (const auto* g = std::get_if<Grad2dData>(&impl_->data)) return g->p1;
  throw ContractViolation("grid_rows(): operator has no grid");
}

std::size_t LinearOperator::grid_cols() const {
  if (const auto* m = std::get_if<MaskData>(&impl_->data)) return m->p2;
  if (const auto* g = std::get_if<Grad2dData>(&impl_->data)) return g->p2;
  throw ContractViolation("grid_cols(): operator has no grid");
}

const std::vector<std::size_t>& LinearOperator::observed() const {
  const auto* m = std::get_if<MaskData>(&impl_->data);
  require(m != nullptr, "observed(): operator is not a mask");
  return m->observed;
}

const std::vector<LinearOperator>& LinearOperator::children() const {
  const auto* s = std::get_if<StackedData>(&impl_->data);
  require(s != nullptr, "children(): operator is not stacked");
  return s->children;
}

const BlockLayout& LinearOperator::layout() const {
  const auto* s = std::get_if<StackedData>(&impl_->data);
  require(s != nullptr, "layout(): operator is not stacked");
  return s->layout;
}

double op_norm(const LinearOperator& op, double tol, int max_iter, std::uint64_t seed) {
  require(tol > 0.0, "op_norm: tol must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(op.in_dim());
  for (auto& x : v) x = normal(rng);
  v.normalize();

  double estimate = 0.0;
  double prev_change = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector z = op.adjoint(op.apply(v));
    const double zn = z.norm();
    if (zn == 0.0) return estimate;
    const double next = std::sqrt(zn);  // ||X^T X v|| <= ||X||^2 for unit v
    v = z / zn;
    const double change = std::abs(next - estimate);
    // Geometric tail estimate: with contraction r the remaining error is about change * r / (1 - r).
    bool settled = change <= 1e-15 * next;
    if (!settled && it >= 2 && prev_change > 0.0) {
      const double r = std::min(change / prev_change, 0.999999);
      settled = change * r / (1.0 - r) <= 0.1 * tol * next && change <= 0.1 * tol * next;
    }
    prev_change = change;
    estimate = next;
    if (settled) break;
  }
  return estimate;
}

}  // namespace iterreg
