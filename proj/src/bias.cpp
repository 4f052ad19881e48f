#include "iterreg/bias.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "iterreg/error.hpp"

namespace iterreg {

struct Bias::Impl {
  BiasKind kind = BiasKind::Zero;
  double alpha = 0.5;
  std::size_t p1 = 0, p2 = 0;
  std::size_t dim = 0;
  std::vector<std::pair<Bias, IndexRange>> parts;
};

Bias::Bias(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Bias Bias::zero() {
  auto impl = std::make_shared<Impl>();
  impl->kind = BiasKind::Zero;
  return Bias(std::move(impl));
}

Bias Bias::l1() {
  auto impl = std::make_shared<Impl>();
  impl->kind = BiasKind::L1;
  return Bias(std::move(impl));
}

Bias Bias::sq_l2(double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "sq_l2: scale must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = BiasKind::SqL2;
  impl->alpha = alpha;
  return Bias(std::move(impl));
}

Bias Bias::nuclear(std::size_t p1, std::size_t p2) {
  require(p1 > 0 && p2 > 0, "nuclear: zero grid dimension");
  auto impl = std::make_shared<Impl>();
  impl->kind = BiasKind::Nuclear;
  impl->p1 = p1;
  impl->p2 = p2;
  impl->dim = p1 * p2;
  return Bias(std::move(impl));
}

Bias Bias::block(std::vector<std::pair<Bias, IndexRange>> parts) {
  require(!parts.empty(), "block bias: no parts");
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.second.offset < b.second.offset; });
  std::size_t next = 0;
  for (const auto& [child, range] : parts) {
    require(range.offset == next && range.length > 0,
            "block bias: ranges must be nonempty, disjoint and cover [0, dim)");
    require(child.fixed_dim() == 0 || child.fixed_dim() == range.length,
            "block bias: child dimension does not match its range");
    next += range.length;
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = BiasKind::Block;
  impl->dim = next;
  impl->parts = std::move(parts);
  return Bias(std::move(impl));
}

BiasKind Bias::kind() const { return impl_->kind; }
double Bias::alpha() const { return impl_->alpha; }
std::size_t Bias::grid_rows() const { return impl_->p1; }
std::size_t Bias::grid_cols() const { return impl_->p2; }
std::size_t Bias::fixed_dim() const { return impl_->dim; }
const std::vector<std::pair<Bias, IndexRange>>& Bias::parts() const { return impl_->parts; }

namespace {

using MatrixView = Eigen::Map<const RowMatrix>;

void check_dim(const Bias& J, const Vector& w, const char* what) {
  if (J.fixed_dim() != 0 && static_cast<std::size_t>(w.size()) != J.fixed_dim()) {
    throw ContractViolation(std::string(what) + ": vector of length " + std::to_string(w.size()) +
                            " does not match bias dimension " + std::to_string(J.fixed_dim()));
  }
}

}  // namespace

Vector soft_threshold(const Vector& v, double tau) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]) - tau;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
  return out;
}

double Bias::eval(const Vector& w) const {
  check_dim(*this, w, "eval");
  switch (impl_->kind) {
    case BiasKind::Zero:
      return 0.0;
    case BiasKind::L1:
      return w.lpNorm<1>();
    case BiasKind::SqL2:
      return impl_->alpha * w.squaredNorm();
    case BiasKind::Nuclear: {
      MatrixView W(w.data(), impl_->p1, impl_->p2);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
      return svd.singularValues().sum();
    }
    case BiasKind::Block: {
      double total = 0.0;
      for (const auto& [child, r] : impl_->parts) total += child.eval(w.segment(r.offset, r.length));
      return total;
    }
  }
  return 0.0;
}

Vector Bias::prox(double tau, const Vector& v) const {
  require(tau >= 0.0, "prox: tau must be nonnegative");
  check_dim(*this, v, "prox");
  if (tau == 0.0) return v;
  switch (impl_->kind) {
    case BiasKind::Zero:
      return v;
    case BiasKind::L1:
      return soft_threshold(v, tau);
    case BiasKind::SqL2:
      return v / (1.0 + 2.0 * impl_->alpha * tau);
    case BiasKind::Nuclear: {
      MatrixView V(v.data(), impl_->p1, impl_->p2);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd s = (svd.singularValues().array() - tau).max(0.0);
      RowMatrix out = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
      return Eigen::Map<const Vector>(out.data(), out.size());
    }
    case BiasKind::Block: {
      Vector out(v.size());
      for (const auto& [child, r] : impl_->parts)
        out.segment(r.offset, r.length) = child.prox(tau, v.segment(r.offset, r.length));
      return out;
    }
  }
  return v;
}

double Bias::subgradient_residual(const Vector& w, const Vector& g, double tol) const {
  require(w.size() == g.size(), "subgradient check: w and g lengths differ");
  check_dim(*this, w, "subgradient check");
  switch (impl_->kind) {
    case BiasKind::Zero:
      return g.norm();
    case BiasKind::L1: {
      double res = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        res = std::max(res, std::abs(g[i]) - 1.0);
        if (std::abs(w[i]) > tol) res = std::max(res, std::abs(g[i] - std::copysign(1.0, w[i])));
      }
      return res;
    }
    case BiasKind::SqL2:
      return (g - 2.0 * impl_->alpha * w).norm();
    case BiasKind::Nuclear:
      // g in dJ(w)  <=>  w = prox_J(w + g)
      return (prox(1.0, w + g) - w).norm();
    case BiasKind::Block: {
      double res = 0.0;
      for (const auto& [child, r] : impl_->parts)
        res = std::max(res, child.subgradient_residual(w.segment(r.offset, r.length),
                                                       g.segment(r.offset, r.length), tol));
      return res;
    }
  }
  return 0.0;
}

}  // namespace iterreg
