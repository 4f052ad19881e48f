#include "iterreg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "iterreg/csv.hpp"
#include "iterreg/error.hpp"

namespace iterreg {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

std::vector<std::size_t> draw_distinct(Rng& rng, std::size_t population, std::size_t count) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

NoisyProblem gen_sparse(std::size_t n, std::size_t p, std::size_t s, double corr, double y_norm,
                        std::uint64_t seed) {
  require(n >= 1 && p >= 1, "gen_sparse: dimensions must be positive");
  require(n <= p, "gen_sparse: needs n <= p");
  require(s <= p, "gen_sparse: sparsity exceeds p");
  require(corr >= 0.0 && corr < 1.0, "gen_sparse: corr must lie in [0, 1)");
  require(y_norm > 0.0, "gen_sparse: y_norm must be positive");

  Rng rng = make_rng(seed, 0);
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd cov(pp, pp);
  for (Eigen::Index i = 0; i < pp; ++i)
    for (Eigen::Index j = 0; j < pp; ++j) cov(i, j) = std::pow(corr, static_cast<double>(std::abs(i - j)));
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require(llt.info() == Eigen::Success, "gen_sparse: covariance is not positive definite");
  const Eigen::MatrixXd z = gaussian_matrix(rng, static_cast<Eigen::Index>(n), pp);
  RowMatrix x = z * llt.matrixL().transpose();

  Vector w0 = Vector::Zero(pp);
  for (auto j : draw_distinct(rng, p, s)) w0[static_cast<Eigen::Index>(j)] = 1.0;
  Vector y = x * w0;
  if (s > 0) {
    const double norm = y.norm();
    require(norm > 0.0, "gen_sparse: generated data vanish");
    w0 *= y_norm / norm;
    y *= y_norm / norm;
  }

  NoisyProblem prob{LinearOperator::dense(std::move(x)), y, y, 0.0, w0, seed, "sparse", {}};
  prob.params = {{"n", double(n)}, {"p", double(p)}, {"s", double(s)}, {"corr", corr}, {"y_norm", y_norm}};
  return prob;
}

NoisyProblem gen_matcomp(std::size_t d, std::size_t r, std::size_t obs_frac_denom, double y_norm,
                         std::uint64_t seed) {
  require(d >= 1 && r >= 1 && r <= d, "gen_matcomp: needs 1 <= r <= d");
  require(obs_frac_denom >= 1, "gen_matcomp: obs_frac_denom must be >= 1");
  require(y_norm > 0.0, "gen_matcomp: y_norm must be positive");
  Rng rng = make_rng(seed, 1);
  const auto dd = static_cast<Eigen::Index>(d);
  const auto rr = static_cast<Eigen::Index>(r);
  const Eigen::MatrixXd u = gaussian_matrix(rng, dd, rr);
  const Eigen::MatrixXd v = gaussian_matrix(rng, dd, rr);
  RowMatrix big_y = u * v.transpose();
  big_y *= y_norm / big_y.norm();

  const std::size_t count = d * d / obs_frac_denom;
  std::vector<GridIndex> observed;
  for (auto flat : draw_distinct(rng, d * d, count)) observed.push_back({flat / d, flat % d});
  auto op = LinearOperator::mask(d, d, std::move(observed));
  Vector truth = Eigen::Map<const Vector>(big_y.data(), big_y.size());
  Vector y = op.apply(truth);

  NoisyProblem prob{std::move(op), y, y, 0.0, truth, seed, "matcomp", {}};
  prob.params = {{"d", double(d)}, {"r", double(r)}, {"obs_frac_denom", double(obs_frac_denom)},
                 {"y_norm", y_norm}};
  return prob;
}

NoisyProblem add_noise(const NoisyProblem& prob, double delta, std::uint64_t seed) {
  require(delta >= 0.0 && std::isfinite(delta), "add_noise: delta must be nonnegative");
  NoisyProblem out = prob;
  out.delta = delta;
  out.params["noise_seed"] = static_cast<double>(seed);
  if (delta == 0.0) {
    out.y_delta = prob.y;
    return out;
  }
  Rng rng = make_rng(seed, 2);
  std::normal_distribution<double> normal;
  const bool masked = prob.X.kind() == OpKind::Mask;
  require(!masked || !prob.X.observed().empty(), "add_noise: mask observes no entry");
  Vector e = Vector::Zero(prob.y.size());
  do {
    if (masked) {
      for (auto idx : prob.X.observed()) e[static_cast<Eigen::Index>(idx)] = normal(rng);
    } else {
      for (auto& v : e) v = normal(rng);
    }
  } while (e.norm() == 0.0);
  out.y_delta = prob.y + delta * e / e.norm();
  return out;
}

TvProblem tv_reformulate(const LinearOperator& X, const Vector& y, std::size_t p1, std::size_t p2) {
  require(p1 > 0 && p2 > 0, "tv_reformulate: zero grid dimension");
  require(X.in_dim() == p1 * p2, "tv_reformulate: operator does not act on p1*p2 images");
  require(static_cast<std::size_t>(y.size()) == X.out_dim(), "tv_reformulate: data length mismatch");
  const std::size_t img = p1 * p2;
  const std::size_t grad_dim = 2 * img;
  BlockLayout layout;
  layout.row_dims = {X.out_dim(), grad_dim};
  layout.col_dims = {img, grad_dim};
  layout.entries = {{0, 0, 0, 1.0}, {1, 0, 1, 1.0}, {1, 1, 2, -1.0}};
  auto op = LinearOperator::stack({X, LinearOperator::grad2d(p1, p2), LinearOperator::identity(grad_dim)},
                                  std::move(layout));
  auto bias = Bias::block({{Bias::zero(), {0, img}}, {Bias::l1(), {img, grad_dim}}});
  Vector yt = Vector::Zero(static_cast<Eigen::Index>(X.out_dim() + grad_dim));
  yt.head(y.size()) = y;
  return {std::move(op), std::move(bias), std::move(yt), img};
}

void save_problem(const NoisyProblem& prob, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("save_problem: cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json meta;
  meta["kind"] = prob.kind;
  meta["seed"] = prob.seed;
  meta["delta"] = prob.delta;
  meta["params"] = prob.params;
  if (prob.X.kind() == OpKind::Mask) {
    meta["operator"] = {{"kind", "mask"}, {"p1", prob.X.grid_rows()}, {"p2", prob.X.grid_cols()}};
    RowMatrix pairs(static_cast<Eigen::Index>(prob.X.observed().size()), 2);
    Eigen::Index r = 0;
    for (auto flat : prob.X.observed()) {
      pairs(r, 0) = static_cast<double>(flat / prob.X.grid_cols());
      pairs(r, 1) = static_cast<double>(flat % prob.X.grid_cols());
      ++r;
    }
    write_matrix_csv(dir / "mask.csv", pairs);
  } else {
    meta["operator"] = {{"kind", "dense"}, {"rows", prob.X.out_dim()}, {"cols", prob.X.in_dim()}};
    write_matrix_csv(dir / "X.csv", prob.X.to_dense());
  }
  write_vector_csv(dir / "y.csv", prob.y);
  write_vector_csv(dir / "y_delta.csv", prob.y_delta);
  if (prob.ground_truth) write_vector_csv(dir / "ground_truth.csv", *prob.ground_truth);
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("save_problem: cannot write meta.json in " + dir.string());
  out << meta.dump(2) << "\n";
}

NoisyProblem load_problem(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw IoError("load_problem: missing meta.json in " + dir.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_problem: malformed meta.json: " + std::string(e.what()));
  }
  const std::string op_kind = meta.at("operator").value("kind", "dense");
  std::optional<LinearOperator> op;
  if (op_kind == "mask") {
    const auto p1 = meta["operator"].at("p1").get<std::size_t>();
    const auto p2 = meta["operator"].at("p2").get<std::size_t>();
    op = load_mask_csv(dir / "mask.csv", p1, p2);
  } else if (op_kind == "dense") {
    op = LinearOperator::dense(read_matrix_csv(dir / "X.csv"));
  } else {
    throw IoError("load_problem: unknown operator kind '" + op_kind + "'");
  }
  Vector y = read_vector_csv(dir / "y.csv");
  Vector y_delta = std::filesystem::exists(dir / "y_delta.csv") ? read_vector_csv(dir / "y_delta.csv") : y;
  require(static_cast<std::size_t>(y.size()) == op->out_dim() && y_delta.size() == y.size(),
          "load_problem: data length does not match operator");
  NoisyProblem prob{*op, std::move(y), std::move(y_delta), meta.value("delta", 0.0), std::nullopt,
                    meta.value("seed", std::uint64_t{0}), meta.value("kind", std::string("custom")), {}};
  if (meta.contains("params")) prob.params = meta["params"].get<std::map<std::string, double>>();
  if (std::filesystem::exists(dir / "ground_truth.csv")) prob.ground_truth = read_vector_csv(dir / "ground_truth.csv");
  return prob;
}

}  // namespace iterreg
