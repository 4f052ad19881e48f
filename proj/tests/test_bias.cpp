#include <doctest.h>

#include <Eigen/SVD>

#include "iterreg/bias.hpp"
#include "iterreg/error.hpp"
#include "test_support.hpp"

using namespace iterreg;
using testing_support::gaussian_vector;
using testing_support::rng_for;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Bias tv_like_block() { return Bias::block({{Bias::l1(), {3, 4}}, {Bias::zero(), {0, 3}}}); }

}  // namespace

TEST_CASE("eval on small inputs") {
  CHECK(Bias::l1().eval(vec({1, -2, 0})) == 3.0);
  CHECK(Bias::nuclear(2, 2).eval(vec({3, 0, 0, 1})) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(Bias::sq_l2().eval(vec({2, 0})) == 2.0);
  CHECK(Bias::sq_l2(3.0).eval(vec({1, 1})) == 6.0);
  CHECK(Bias::zero().eval(vec({5, -5})) == 0.0);
  CHECK(tv_like_block().eval(vec({9, 9, 9, 1, -1, 2, 0})) == 4.0);
}

TEST_CASE("J(0) = 0 for every kind") {
  for (const auto& J : {Bias::l1(), Bias::sq_l2(), Bias::nuclear(2, 3), Bias::zero()})
    CHECK(J.eval(Vector::Zero(6)) == 0.0);
  CHECK(tv_like_block().eval(Vector::Zero(7)) == 0.0);
}

TEST_CASE("nuclear norm equals the sum of Gram-derived singular values") {
  auto rng = rng_for(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector w = gaussian_vector(rng, 20 * 20);
    const Eigen::MatrixXd W = testing_support::as_matrix(w, 20, 20);
    const double oracle = testing_support::singular_values_via_gram(W).sum();
    CHECK(Bias::nuclear(20, 20).eval(w) == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("prox closed forms") {
  CHECK(Bias::l1().prox(1.0, vec({2, -0.5})) == vec({1, 0}));
  CHECK(Bias::sq_l2().prox(1.0, vec({2, 0})) == vec({1, 0}));
  CHECK(Bias::sq_l2(2.0).prox(0.5, vec({3, -3})) == vec({1, -1}));
  CHECK(Bias::nuclear(2, 2).prox(1.0, vec({3, 0, 0, 1})).isApprox(vec({2, 0, 0, 0}), 1e-12));
  CHECK(Bias::zero().prox(7.0, vec({1, 2})) == vec({1, 2}));
  // ties at the threshold map to zero
  CHECK(Bias::l1().prox(1.0, vec({1, -1})) == vec({0, 0}));
  CHECK(tv_like_block().prox(1.0, vec({5, 5, 5, 3, -0.5, 2, -4})) == vec({5, 5, 5, 2, 0, 1, -3}));
}

TEST_CASE("prox with tau = 0 is the identity") {
  auto rng = rng_for(9);
  const Vector v = gaussian_vector(rng, 9);
  for (const auto& J : {Bias::l1(), Bias::sq_l2(), Bias::nuclear(3, 3), Bias::zero()}) CHECK(J.prox(0.0, v) == v);
}

TEST_CASE("prox is firmly nonexpansive") {
  auto rng = rng_for(10);
  std::uniform_real_distribution<double> tau_dist(0.01, 5.0);
  for (const auto& J : {Bias::l1(), Bias::sq_l2(0.7), Bias::nuclear(4, 5), Bias::zero()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const double tau = tau_dist(rng);
      const Vector u = gaussian_vector(rng, 20, 2.0), v = gaussian_vector(rng, 20, 2.0);
      const Vector d = J.prox(tau, u) - J.prox(tau, v);
      CHECK(d.squaredNorm() <= d.dot(u - v) + 1e-12 * (1.0 + (u - v).squaredNorm()));
    }
  }
}

TEST_CASE("Moreau decomposition for l1") {
  auto rng = rng_for(12);
  for (double tau : {0.1, 1.0, 10.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector v = gaussian_vector(rng, 15, 3.0);
      const Vector proj = (v / tau).cwiseMax(-1.0).cwiseMin(1.0);
      CHECK((Bias::l1().prox(tau, v) + tau * proj - v).norm() <= 1e-12 * (1.0 + v.norm()));
    }
  }
}

TEST_CASE("prox output satisfies the subgradient inclusion") {
  auto rng = rng_for(13);
  for (const auto& J : {Bias::l1(), Bias::sq_l2(), Bias::nuclear(4, 4)}) {
    for (double tau : {0.1, 1.0, 10.0}) {
      const Vector v = gaussian_vector(rng, 16, 2.0);
      const Vector p = J.prox(tau, v);
      CHECK(J.subgradient_check(p, (v - p) / tau, 1e-8));
    }
  }
}

TEST_CASE("SVT keeps the singular subspaces of its input") {
  auto rng = rng_for(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector v = gaussian_vector(rng, 16);
    const double tau = 0.8;
    const Eigen::MatrixXd V = testing_support::as_matrix(v, 4, 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector p = Bias::nuclear(4, 4).prox(tau, v);
    const Eigen::MatrixXd P = testing_support::as_matrix(p, 4, 4);
    for (int i = 0; i < 4; ++i) {
      const double shrunk = std::max(svd.singularValues()[i] - tau, 0.0);
      CHECK((P * svd.matrixV().col(i) - shrunk * svd.matrixU().col(i)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("subgradient checks") {
  const auto l1 = Bias::l1();
  CHECK(l1.subgradient_check(vec({1, 0}), vec({1, 0.3}), 1e-8));
  CHECK_FALSE(l1.subgradient_check(vec({1, 0}), vec({0.5, 0}), 1e-8));
  CHECK_FALSE(l1.subgradient_check(vec({1, 0}), vec({1, 1.2}), 1e-8));
  CHECK(Bias::sq_l2().subgradient_check(vec({2, 0}), vec({2, 0}), 1e-12));
  CHECK_FALSE(Bias::sq_l2().subgradient_check(vec({2, 0}), vec({1, 0}), 1e-12));
  CHECK(Bias::zero().subgradient_check(vec({3, 4}), vec({0, 0}), 1e-12));
  CHECK_FALSE(Bias::zero().subgradient_check(vec({3, 4}), vec({0, 1e-3}), 1e-6));
  // nuclear: W = diag(2, 0) has subgradient diag(1, t) for |t| <= 1
  CHECK(Bias::nuclear(2, 2).subgradient_check(vec({2, 0, 0, 0}), vec({1, 0, 0, 0.5}), 1e-10));
  CHECK_FALSE(Bias::nuclear(2, 2).subgradient_check(vec({2, 0, 0, 0}), vec({1, 0, 0, 1.5}), 1e-10));
  CHECK(tv_like_block().subgradient_check(vec({7, 7, 7, 1, 0, -1, 0}), vec({0, 0, 0, 1, 0.2, -1, -0.9}), 1e-10));
}

TEST_CASE("bias contract violations") {
  CHECK_THROWS_AS(Bias::nuclear(2, 2).eval(Vector::Zero(5)), ContractViolation);
  CHECK_THROWS_AS(Bias::nuclear(2, 2).prox(1.0, Vector::Zero(3)), ContractViolation);
  CHECK_THROWS_AS(Bias::l1().prox(-1.0, Vector::Zero(3)), ContractViolation);
  CHECK_THROWS_AS(Bias::sq_l2(0.0), ContractViolation);
  CHECK_THROWS_AS(Bias::block({{Bias::l1(), {0, 2}}, {Bias::l1(), {3, 2}}}), ContractViolation);
  CHECK_THROWS_AS(Bias::block({{Bias::nuclear(2, 2), {0, 3}}}), ContractViolation);
  CHECK_THROWS_AS(tv_like_block().eval(Vector::Zero(6)), ContractViolation);
}
