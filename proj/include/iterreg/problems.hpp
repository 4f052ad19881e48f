#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "iterreg/bias.hpp"
#include "iterreg/linop.hpp"

namespace iterreg {

/// Every generator draws from std::mt19937_64 (the 64-bit Mersenne Twister,
/// whose output sequence is fixed by the C++ standard) seeded through
/// std::seed_seq{seed, stream}. Gaussian variates come from
/// std::normal_distribution, so streams are deterministic within a build but
/// not across standard library implementations.
using Rng = std::mt19937_64;
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Linear system with clean data y and observed data y_delta, ||y - y_delta|| = delta.
struct NoisyProblem {
  LinearOperator X;
  Vector y;
  Vector y_delta;
  double delta = 0.0;
  std::optional<Vector> ground_truth;
  std::uint64_t seed = 0;
  std::string kind = "custom";
  std::map<std::string, double> params;
};

/// Rows of X i.i.d. N(0, Sigma) with Sigma_ij = corr^|i-j| (Cholesky factor of
/// Sigma); w0 has s entries equal to one at uniformly drawn positions; w0 and
/// y = X w0 are rescaled jointly so that ||y|| = y_norm.
NoisyProblem gen_sparse(std::size_t n = 200, std::size_t p = 500, std::size_t s = 75, double corr = 0.2,
                        double y_norm = 20.0, std::uint64_t seed = 0);

/// Y = U V^T with U, V d x r i.i.d. Gaussian, scaled to Frobenius norm y_norm;
/// floor(d^2 / obs_frac_denom) distinct entries observed uniformly at random.
NoisyProblem gen_matcomp(std::size_t d = 20, std::size_t r = 5, std::size_t obs_frac_denom = 5,
                         double y_norm = 20.0, std::uint64_t seed = 0);

/// y_delta = y + delta e / ||e|| with e i.i.d. Gaussian over the data space.
/// For a mask operator the data space is the set of observed entries, so the
/// noise is drawn there only.
NoisyProblem add_noise(const NoisyProblem& prob, double delta, std::uint64_t seed);

struct TvProblem {
  LinearOperator op;  // [[X, 0], [grad, -Id]]
  Bias bias;          // zero on the image block, l1 on the gradient block
  Vector y;           // (y, 0)
  std::size_t image_dim = 0;
};

/// Stacked reformulation of min ||grad W||_1 s.t. X W = y as
/// min ||U||_1 s.t. X W = y, grad W - U = 0 over (W, U).
TvProblem tv_reformulate(const LinearOperator& X, const Vector& y, std::size_t p1, std::size_t p2);

/// Directory layout: X.csv (dense rows) or mask.csv (i,j pairs, zero based),
/// y.csv, y_delta.csv, optional ground_truth.csv, and meta.json holding kind,
/// params, seed, delta and the operator description.
void save_problem(const NoisyProblem& prob, const std::filesystem::path& dir);
NoisyProblem load_problem(const std::filesystem::path& dir);

}  // namespace iterreg
