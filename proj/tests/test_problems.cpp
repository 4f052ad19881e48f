#include <doctest.h>

#include <filesystem>

#include <Eigen/SVD>

#include "iterreg/error.hpp"
#include "iterreg/pdsolver.hpp"
#include "iterreg/problems.hpp"
#include "test_support.hpp"

using namespace iterreg;
namespace fs = std::filesystem;

namespace {

// Sample second moments of the rows of X pooled over several seeds.
Eigen::MatrixXd pooled_covariance(std::size_t p, double corr, int seeds, std::size_t n) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  double rows = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto prob = gen_sparse(n, p, 1, corr, 1.0, static_cast<std::uint64_t>(s));
    const RowMatrix& x = prob.X.matrix();
    acc += x.transpose() * x;
    rows += static_cast<double>(x.rows());
  }
  return acc / rows;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("iterreg_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("sparse generator shapes and scaling") {
  const auto prob = gen_sparse(20, 50, 7, 0.2, 20.0, 3);
  CHECK(prob.X.out_dim() == 20);
  CHECK(prob.X.in_dim() == 50);
  CHECK(prob.y.norm() == doctest::Approx(20.0).epsilon(1e-12));
  REQUIRE(prob.ground_truth.has_value());
  const Vector& w0 = *prob.ground_truth;
  CHECK((prob.X.apply(w0) - prob.y).norm() <= 1e-10 * prob.y.norm());
  int nnz = 0;
  double value = 0.0;
  for (double v : w0)
    if (v != 0.0) {
      ++nnz;
      if (value == 0.0) value = v;
      CHECK(v == doctest::Approx(value).epsilon(1e-15));
    }
  CHECK(nnz == 7);
  CHECK(prob.y_delta == prob.y);
  CHECK(prob.delta == 0.0);
}

TEST_CASE("sparse generator with s = 0 gives zero data") {
  const auto prob = gen_sparse(5, 10, 0, 0.2, 20.0, 1);
  CHECK(prob.y.norm() == 0.0);
  CHECK(prob.ground_truth->norm() == 0.0);
}

TEST_CASE("uncorrelated design has identity covariance") {
  const auto c = pooled_covariance(40, 0.0, 125, 40);  // 5000 rows
  const double err = (c - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff();
  CHECK(err <= 0.1);
}

TEST_CASE("correlated design follows the Toeplitz covariance") {
  const auto c = pooled_covariance(20, 0.2, 250, 20);
  double err = 0.0;
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 20; ++j) err = std::max(err, std::abs(c(i, j) - std::pow(0.2, std::abs(i - j))));
  CHECK(err <= 0.1);
}

TEST_CASE("generators are deterministic in the seed") {
  const auto a = gen_sparse(10, 30, 4, 0.2, 20.0, 9), b = gen_sparse(10, 30, 4, 0.2, 20.0, 9);
  CHECK(a.X.matrix() == b.X.matrix());
  CHECK(a.y == b.y);
  CHECK(gen_sparse(10, 30, 4, 0.2, 20.0, 10).y != a.y);
  const auto m1 = gen_matcomp(8, 2, 4, 20.0, 5), m2 = gen_matcomp(8, 2, 4, 20.0, 5);
  CHECK(m1.X.observed() == m2.X.observed());
  CHECK(*m1.ground_truth == *m2.ground_truth);
}

TEST_CASE("matrix completion generator") {
  const auto prob = gen_matcomp(20, 5, 5, 20.0, 0);
  CHECK(prob.X.kind() == OpKind::Mask);
  CHECK(prob.X.observed().size() == 80);
  const Vector& truth = *prob.ground_truth;
  CHECK(truth.norm() == doctest::Approx(20.0).epsilon(1e-12));
  const auto sv = testing_support::singular_values_via_gram(testing_support::as_matrix(truth, 20, 20));
  int rank = 0;
  for (double s : sv)
    if (s > 1e-8 * sv[0]) ++rank;
  CHECK(rank == 5);
  CHECK((prob.X.apply(truth) - prob.y).norm() == 0.0);
}

TEST_CASE("fully observed full-rank completion is exactly determined") {
  const auto prob = gen_matcomp(4, 4, 1, 20.0, 2);
  CHECK(prob.X.observed().size() == 16);
  const auto cert = certify(prob.X, Bias::nuclear(4, 4), prob.y, SolverConfig::symmetric(prob.X));
  CHECK((cert.w_star - *prob.ground_truth).norm() <= 1e-8 * 20.0);
}

TEST_CASE("noise has the exact requested norm") {
  const auto base = gen_sparse(15, 30, 5, 0.2, 20.0, 4);
  CHECK(add_noise(base, 0.0, 1).y_delta == base.y);
  for (double delta : {1e-3, 0.5, 3.0, 40.0}) {
    const auto a = add_noise(base, delta, 11), b = add_noise(base, delta, 12);
    CHECK((a.y_delta - a.y).norm() == doctest::Approx(delta).epsilon(1e-10));
    CHECK((b.y_delta - b.y).norm() == doctest::Approx(delta).epsilon(1e-10));
    CHECK(a.y_delta != b.y_delta);
    CHECK(a.delta == delta);
  }
  CHECK(add_noise(base, 0.7, 5).y_delta == add_noise(base, 0.7, 5).y_delta);
  CHECK_THROWS_AS(add_noise(base, -1.0, 1), ContractViolation);
}

TEST_CASE("mask noise stays on observed entries") {
  const auto base = gen_matcomp(10, 2, 5, 20.0, 1);
  const auto noisy = add_noise(base, 2.0, 3);
  const Vector e = noisy.y_delta - noisy.y;
  CHECK(e.norm() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK((base.X.apply(e) - e).norm() == 0.0);
}

TEST_CASE("tv reformulation layout") {
  const auto X = LinearOperator::identity(9);
  const Vector y = Vector::LinSpaced(9, 1.0, 9.0);
  const auto tv = tv_reformulate(X, y, 3, 3);
  CHECK(tv.image_dim == 9);
  CHECK(tv.op.in_dim() == 9 + 18);
  CHECK(tv.op.out_dim() == 9 + 18);
  CHECK(tv.y.head(9) == y);
  CHECK(tv.y.tail(18).norm() == 0.0);
  // (W, grad W) is feasible with objective ||grad W||_1
  Vector z(27);
  z << y, LinearOperator::grad2d(3, 3).apply(y);
  CHECK((tv.op.apply(z) - tv.y).norm() <= 1e-12);
  CHECK(tv.bias.eval(z) == doctest::Approx(LinearOperator::grad2d(3, 3).apply(y).lpNorm<1>()));
  CHECK_THROWS_AS(tv_reformulate(X, y, 2, 4), ContractViolation);
}

TEST_CASE("tv of a fully observed constant image") {
  const auto X = LinearOperator::identity(16);
  const Vector y = Vector::Constant(16, 2.0);
  const auto tv = tv_reformulate(X, y, 4, 4);
  const auto cert = certify(tv.op, tv.bias, tv.y, SolverConfig::symmetric(tv.op));
  CHECK((cert.w_star.head(16) - y).norm() <= 1e-8);
  CHECK(cert.w_star.tail(32).norm() <= 1e-8);
}

TEST_CASE("tv inpainting toy satisfies the gradient constraint") {
  // left half 0, right half 1; two pixels hidden
  Vector img(16);
  img << 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1;
  std::vector<GridIndex> seen;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (!((i == 1 && j == 1) || (i == 2 && j == 2))) seen.push_back({i, j});
  const auto M = LinearOperator::mask(4, 4, seen);
  const auto tv = tv_reformulate(M, M.apply(img), 4, 4);
  const auto cert = certify(tv.op, tv.bias, tv.y, SolverConfig::symmetric(tv.op));
  const Vector w = cert.w_star.head(16), u = cert.w_star.tail(32);
  CHECK((LinearOperator::grad2d(4, 4).apply(w) - u).norm() <= 1e-8);
  CHECK((w - img).norm() <= 1e-6);
}

TEST_CASE("problems round-trip through a directory") {
  SUBCASE("dense") {
    const auto prob = add_noise(gen_sparse(6, 12, 3, 0.2, 20.0, 2), 0.5, 7);
    const auto dir = scratch_dir("dense");
    save_problem(prob, dir);
    const auto back = load_problem(dir);
    CHECK(back.X.matrix() == prob.X.matrix());
    CHECK(back.y == prob.y);
    CHECK(back.y_delta == prob.y_delta);
    CHECK(back.delta == prob.delta);
    CHECK(*back.ground_truth == *prob.ground_truth);
    CHECK(back.seed == prob.seed);
    CHECK(back.kind == "sparse");
    CHECK(back.params.at("s") == 3.0);
    fs::remove_all(dir);
  }
  SUBCASE("mask") {
    const auto prob = gen_matcomp(6, 2, 3, 20.0, 4);
    const auto dir = scratch_dir("mask");
    save_problem(prob, dir);
    const auto back = load_problem(dir);
    CHECK(back.X.kind() == OpKind::Mask);
    CHECK(back.X.observed() == prob.X.observed());
    CHECK(back.y == prob.y);
    fs::remove_all(dir);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_problem(scratch_dir("absent")), IoError);
  }
}
