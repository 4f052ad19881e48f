#include <doctest.h>

#include <Eigen/SVD>

#include "iterreg/error.hpp"
#include "iterreg/linop.hpp"
#include "test_support.hpp"

using namespace iterreg;
using testing_support::gaussian_matrix;
using testing_support::gaussian_vector;
using testing_support::rng_for;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LinearOperator tv_block_2x2() {
  BlockLayout layout{{4, 8}, {4, 8}, {{0, 0, 0, 1.0}, {1, 0, 1, 1.0}, {1, 1, 2, -1.0}}};
  return LinearOperator::stack({LinearOperator::identity(4), LinearOperator::grad2d(2, 2), LinearOperator::identity(8)},
                               layout);
}

double adjoint_mismatch(const LinearOperator& op, std::mt19937_64& rng) {
  const Vector w = gaussian_vector(rng, static_cast<Eigen::Index>(op.in_dim()));
  const Vector t = gaussian_vector(rng, static_cast<Eigen::Index>(op.out_dim()));
  return std::abs(op.apply(w).dot(t) - w.dot(op.adjoint(t))) / (1.0 + w.norm() * t.norm());
}

}  // namespace

TEST_CASE("dense apply and adjoint by hand") {
  RowMatrix m(2, 2);
  m << 1, 2, 0, 3;
  const auto X = LinearOperator::dense(m);
  CHECK(X.kind() == OpKind::Dense);
  CHECK(X.apply(vec({1, 1})).isApprox(vec({3, 3})));
  CHECK(X.adjoint(vec({1, 1})).isApprox(vec({1, 5})));

  RowMatrix eye = RowMatrix::Identity(2, 2);
  CHECK(LinearOperator::dense(eye).apply(vec({3, -1})) == vec({3, -1}));
}

TEST_CASE("identity operator") {
  const auto I = LinearOperator::identity(2);
  CHECK(I.apply(vec({3, -1})) == vec({3, -1}));
  CHECK(I.adjoint(vec({1, 2})) == vec({1, 2}));
  CHECK(I.to_dense().isApprox(RowMatrix::Identity(2, 2)));
}

TEST_CASE("mask keeps observed entries only") {
  const auto M = LinearOperator::mask(2, 2, {{0, 0}});
  // W = [[5, 2], [7, 1]] in row-major order
  CHECK(M.apply(vec({5, 2, 7, 1})) == vec({5, 0, 0, 0}));
  CHECK(M.out_dim() == 4);
  CHECK(M.in_dim() == 4);
}

TEST_CASE("mask merges duplicates and sorts indices") {
  const auto M = LinearOperator::mask(3, 3, {{2, 1}, {0, 2}, {2, 1}});
  REQUIRE(M.observed().size() == 2);
  CHECK(M.observed()[0] == 2);
  CHECK(M.observed()[1] == 7);
}

TEST_CASE("mask is self-adjoint and idempotent") {
  auto rng = rng_for(11);
  const auto M = LinearOperator::mask(4, 5, {{0, 0}, {1, 3}, {3, 4}, {2, 2}});
  for (int trial = 0; trial < 20; ++trial) {
    const Vector v = gaussian_vector(rng, 20);
    CHECK(M.adjoint(v) == M.apply(v));
    CHECK(M.apply(M.apply(v)) == M.apply(v));
  }
}

TEST_CASE("grad2d forward differences on a 2x2 grid") {
  const auto G = LinearOperator::grad2d(2, 2);
  // a b / c d  ->  vertical (c-a, d-b, 0, 0), horizontal (b-a, 0, d-c, 0)
  const Vector out = G.apply(vec({1, 4, 9, 16}));
  CHECK(out == vec({8, 12, 0, 0, 3, 0, 7, 0}));
}

TEST_CASE("grad2d of a constant image vanishes") {
  const auto G = LinearOperator::grad2d(5, 7);
  CHECK(G.apply(Vector::Constant(35, 2.5)).norm() == 0.0);
}

TEST_CASE("stacked operators") {
  SUBCASE("a single identity block behaves as the identity") {
    const auto S = LinearOperator::stack({LinearOperator::identity(2)}, {{2}, {2}, {{0, 0, 0, 1.0}}});
    CHECK(S.apply(vec({3, -1})) == vec({3, -1}));
    CHECK(S.adjoint(vec({1, 2})) == vec({1, 2}));
  }
  SUBCASE("TV block returns (W, grad W - U)") {
    const auto S = tv_block_2x2();
    Vector wu(12);
    wu << 1, 4, 9, 16, 1, 1, 1, 1, 1, 1, 1, 1;
    Vector expect(12);
    expect << 1, 4, 9, 16, 7, 11, -1, -1, 2, -1, 6, -1;
    CHECK(S.apply(wu) == expect);
  }
  SUBCASE("vstack concatenates outputs") {
    RowMatrix a(1, 2), b(2, 2);
    a << 1, 1;
    b << 1, 0, 0, 2;
    const auto V = LinearOperator::vstack({LinearOperator::dense(a), LinearOperator::dense(b)});
    CHECK(V.out_dim() == 3);
    CHECK(V.apply(vec({1, 2})) == vec({3, 1, 4}));
  }
  SUBCASE("dimensions are sums of the block dimensions") {
    const auto S = tv_block_2x2();
    CHECK(S.in_dim() == 12);
    CHECK(S.out_dim() == 12);
  }
}

TEST_CASE("adjoint consistency across operator kinds") {
  auto rng = rng_for(3);
  std::vector<LinearOperator> ops{
      LinearOperator::dense(gaussian_matrix(rng, 7, 11)), LinearOperator::identity(6),
      LinearOperator::mask(4, 6, {{0, 1}, {3, 5}, {2, 2}, {1, 0}}), LinearOperator::grad2d(5, 4),
      tv_block_2x2(),
      LinearOperator::vstack({LinearOperator::grad2d(3, 3), LinearOperator::identity(9)})};
  for (const auto& op : ops)
    for (int trial = 0; trial < 25; ++trial) CHECK(adjoint_mismatch(op, rng) <= 1e-10);
}

TEST_CASE("to_dense agrees with apply") {
  auto rng = rng_for(5);
  const auto S = tv_block_2x2();
  const RowMatrix D = S.to_dense();
  for (int trial = 0; trial < 5; ++trial) {
    const Vector w = gaussian_vector(rng, 12);
    CHECK((D * w - S.apply(w)).norm() <= 1e-12 * (1.0 + w.norm()));
  }
}

TEST_CASE("op_norm on closed-form cases") {
  const double tol = 1e-6;
  CHECK(op_norm(LinearOperator::identity(5), tol) == doctest::Approx(1.0).epsilon(tol));
  RowMatrix d(2, 2);
  d << 3, 0, 0, 1;
  CHECK(op_norm(LinearOperator::dense(d), tol) == doctest::Approx(3.0).epsilon(tol));
  CHECK(op_norm(LinearOperator::mask(3, 3, {{0, 0}, {2, 1}}), tol) == doctest::Approx(1.0).epsilon(tol));
  CHECK(op_norm(LinearOperator::dense(RowMatrix::Zero(3, 4))) == 0.0);
  CHECK(op_norm(LinearOperator::mask(2, 2, {})) == 0.0);
}

TEST_CASE("op_norm against a dense SVD") {
  auto rng = rng_for(17);
  for (int trial = 0; trial < 5; ++trial) {
    const RowMatrix A = gaussian_matrix(rng, 30, 50);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()[0];
    const double est = op_norm(LinearOperator::dense(A), 1e-6, 5000, static_cast<std::uint64_t>(trial));
    CHECK(est >= (1.0 - 1e-6) * exact);
    CHECK(est <= exact * (1.0 + 1e-12));
  }
}

TEST_CASE("op_norm dominates sampled Rayleigh quotients") {
  auto rng = rng_for(23);
  const auto X = LinearOperator::dense(gaussian_matrix(rng, 20, 35));
  const double tol = 1e-6;
  const double nu = op_norm(X, tol);
  for (int trial = 0; trial < 100; ++trial) {
    Vector w = gaussian_vector(rng, 35);
    w.normalize();
    CHECK(nu >= X.apply(w).norm() - tol * nu);
  }
}

TEST_CASE("operator contract violations") {
  RowMatrix m(2, 3);
  m.setOnes();
  const auto X = LinearOperator::dense(m);
  CHECK_THROWS_AS(X.apply(Vector::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(X.adjoint(Vector::Zero(3)), ContractViolation);
  CHECK_THROWS_AS(LinearOperator::mask(2, 2, {{2, 0}}), ContractViolation);
  CHECK_THROWS_AS(LinearOperator::stack({LinearOperator::identity(3)}, {{2}, {2}, {{0, 0, 0, 1.0}}}),
                  ContractViolation);
  CHECK_THROWS_AS(LinearOperator::identity(3).matrix(), ContractViolation);
  CHECK_THROWS_AS(op_norm(X, 0.0), ContractViolation);
}
