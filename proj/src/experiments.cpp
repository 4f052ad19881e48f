#include "iterreg/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "iterreg/baseline.hpp"
#include "iterreg/csv.hpp"
#include "iterreg/error.hpp"
#include "iterreg/metrics.hpp"
#include "iterreg/stopping.hpp"
#include "iterreg/svg.hpp"
#include "parallel.hpp"

namespace iterreg {

namespace {

using Curve = std::vector<std::pair<long, double>>;

constexpr double kBoundSlack = 1e-8;

long iterations_or(const ExperimentSpec& spec, long fallback) { return spec.max_iter.value_or(fallback); }

std::vector<double> deltas_or(const ExperimentSpec& spec, std::vector<double> fallback) {
  return spec.deltas.empty() ? fallback : spec.deltas;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

SolverConfig solver_for(const LinearOperator& X, const ExperimentSpec& spec, double epsilon, long iters) {
  auto cfg = SolverConfig::symmetric(X, epsilon);
  cfg.max_iter = iters;
  cfg.record_every = spec.record_every;
  cfg.seed = spec.seed;
  return cfg;
}

// Minimum over recorded k >= min_k, ties to the smaller k.
CurveSummary summarize(const Curve& curve, double delta, int rep, std::uint64_t nseed, long min_k = 0) {
  require(!curve.empty(), "empty distance curve");
  CurveSummary s;
  s.delta = delta;
  s.replicate = rep;
  s.noise_seed = nseed;
  s.d_first = curve.front().second;
  s.d_last = curve.back().second;
  std::size_t best = curve.size();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].first < min_k) continue;
    if (best == curve.size() || curve[i].second < curve[best].second) best = i;
  }
  require(best < curve.size(), "distance curve has no iterate past the minimum index");
  s.k_star = curve[best].first;
  s.d_min = curve[best].second;
  s.interior_index = best > 0 && best + 1 < curve.size();
  return s;
}

nlohmann::json to_json(const CurveSummary& c) {
  return {{"delta", c.delta},     {"replicate", c.replicate}, {"noise_seed", c.noise_seed},
          {"k_star", c.k_star},   {"d_first", c.d_first},     {"d_min", c.d_min},
          {"d_last", c.d_last},   {"interior_index", c.interior_index},
          {"interior_1pct", c.has_interior_min(0.01)}};
}

nlohmann::json to_json(const SaddleCertificate& cert) {
  return {{"iterations", cert.iterations},
          {"feas_res", cert.feas_res},
          {"subgrad_res", cert.subgrad_res},
          {"j_star", cert.j_star}};
}

// Noisy replicates over a shared clean problem, distances to its certificate.
SemiconvResult semiconv_common(const ExperimentSpec& spec, const NoisyProblem& prob, const Bias& J,
                               const std::vector<double>& deltas, const std::string& stem,
                               const std::string& title) {
  ensure_dir(spec.out_dir);
  const long iters = iterations_or(spec, 5000);
  const auto cfg = solver_for(prob.X, spec, spec.epsilon, iters);

  SemiconvResult out;
  out.cert = certify(prob.X, J, prob.y, cfg);
  out.deltas = deltas;

  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t total = deltas.size() * reps;
  std::vector<Curve> curves(total);
  out.curves.resize(total);
  detail::parallel_for(total, spec.threads, [&](std::size_t i) {
    const std::size_t di = i / reps;
    const int rep = static_cast<int>(i % reps);
    const std::uint64_t nseed = noise_seed(spec.seed, di, rep);
    const Vector y_obs = deltas[di] > 0.0 ? add_noise(prob, deltas[di], nseed).y_delta : prob.y;
    curves[i] = distance_curve(prob.X, J, y_obs, cfg, out.cert.w_star);
    out.curves[i] = summarize(curves[i], deltas[di], rep, nseed);
  });

  CsvTable raw({"delta", "replicate", "k", "distance"});
  for (std::size_t i = 0; i < total; ++i)
    for (const auto& [k, d] : curves[i])
      raw.add_row({format_number(out.curves[i].delta), std::to_string(out.curves[i].replicate),
                   std::to_string(k), format_number(d)});
  raw.write(spec.out_dir / (stem + "_curves.csv"));

  CsvTable summary({"delta", "replicate", "noise_seed", "k_star", "d_first", "d_min", "d_last",
                    "interior_index", "interior_1pct"});
  for (const auto& c : out.curves)
    summary.add_row({format_number(c.delta), std::to_string(c.replicate), std::to_string(c.noise_seed),
                     std::to_string(c.k_star), format_number(c.d_first), format_number(c.d_min),
                     format_number(c.d_last), c.interior_index ? "1" : "0",
                     c.has_interior_min(0.01) ? "1" : "0"});
  summary.write(spec.out_dir / (stem + "_summary.csv"));

  std::vector<Series> series;
  Series markers{"oracle stops", {}, {}, true};
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    const Curve& first = curves[di * reps];
    Series s{"delta " + format_number(deltas[di]), {}, {}, false};
    double min_sum = 0.0;
    for (std::size_t j = 0; j < first.size(); ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < reps; ++r) acc += curves[di * reps + r][j].second;
      s.x.push_back(static_cast<double>(first[j].first));
      s.y.push_back(acc / static_cast<double>(reps));
    }
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& c = out.curves[di * reps + r];
      markers.x.push_back(static_cast<double>(c.k_star));
      markers.y.push_back(c.d_min);
      min_sum += c.d_min;
    }
    out.mean_min.push_back(min_sum / static_cast<double>(reps));
    series.push_back(std::move(s));
  }
  series.push_back(std::move(markers));
  write_line_plot(spec.out_dir / (stem + ".svg"),
                  {title, "iteration k", "||w_k - w*|| (replicate mean)", true}, series);
  return out;
}

nlohmann::json semiconv_json(const SemiconvResult& r) {
  nlohmann::json j;
  j["certificate"] = to_json(r.cert);
  j["deltas"] = r.deltas;
  j["mean_min"] = r.mean_min;
  j["curves"] = nlohmann::json::array();
  for (const auto& c : r.curves) j["curves"].push_back(to_json(c));
  return j;
}

NoisyProblem sparse_problem(const ExperimentSpec& spec) {
  const auto& s = spec.sparse;
  return gen_sparse(s.n, s.p, s.s, s.corr, s.y_norm, spec.seed);
}

NoisyProblem matcomp_problem(const ExperimentSpec& spec) {
  const auto& m = spec.matcomp;
  return gen_matcomp(m.d, m.r, m.denom, m.y_norm, spec.seed);
}

RowMatrix select_rows(const RowMatrix& X, const std::vector<std::size_t>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Vector select_entries(const Vector& v, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

double mse(const RowMatrix& X, const Vector& w, const Vector& y) {
  return (X * w - y).squaredNorm() / static_cast<double>(y.size());
}

// Two blocks on a zero background; values stay O(1) so delta is comparable to ||y||.
Vector tv_phantom(std::size_t side) {
  Vector img = Vector::Zero(static_cast<Eigen::Index>(side * side));
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      const auto at = static_cast<Eigen::Index>(i * side + j);
      if (i >= side / 6 && i < side / 2 && j >= side / 6 && j < side / 2) img[at] = 1.0;
      if (i >= (5 * side) / 8 && i < side - side / 8 && j >= side / 2 && j < side - side / 8) img[at] = -0.5;
    }
  return img;
}

RowMatrix as_grid(const Vector& v, std::size_t side) {
  RowMatrix m(static_cast<Eigen::Index>(side), static_cast<Eigen::Index>(side));
  for (std::size_t i = 0; i < side * side; ++i)
    m(static_cast<Eigen::Index>(i / side), static_cast<Eigen::Index>(i % side)) = v[static_cast<Eigen::Index>(i)];
  return m;
}

Bias bias_by_name(const std::string& name, const LinearOperator& X) {
  if (name == "l1") return Bias::l1();
  if (name == "sq_l2") return Bias::sq_l2();
  if (name == "nuclear") {
    if (X.kind() == OpKind::Mask) return Bias::nuclear(X.grid_rows(), X.grid_cols());
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(X.in_dim()))));
    require(side * side == X.in_dim(), "nuclear bias needs a mask operator or a square image dimension");
    return Bias::nuclear(side, side);
  }
  throw ContractViolation("unknown bias '" + name + "' (expected l1, sq_l2 or nuclear)");
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + ": options must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ContractViolation(where + ": unknown option '" + key + "'");
}

}  // namespace

bool CurveSummary::has_interior_min(double margin) const {
  return interior_index && d_min <= (1.0 - margin) * std::min(d_first, d_last);
}

void ExperimentSpec::validate() const {
  static const std::set<std::string> names{"semiconv", "stoptime", "bounds", "pathcmp",
                                           "matcomp",  "tv-demo",  "solve"};
  require(names.count(name) > 0, "unknown experiment '" + name + "'");
  require(replicates >= 1, "replicates must be >= 1");
  require(record_every >= 1, "record_every must be >= 1");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  for (double e : epsilons) require(e > 0.0 && e < 1.0, "epsilon sweep values must lie in (0, 1)");
  for (double d : deltas) require(d >= 0.0 && std::isfinite(d), "deltas must be finite and >= 0");
  if (max_iter) require(*max_iter >= 1, "max_iter must be >= 1");
  require(path.folds >= 2 && path.folds <= path.n, "pathcmp needs 2 <= folds <= n");
  require(tv.side >= 2 && tv.ratio > 0.0, "tv-demo needs side >= 2 and a positive ratio");
}

std::optional<LinearFit> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "fit_line: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.pearson_r = sxy / std::sqrt(sxx * syy);
  return f;
}

std::uint64_t noise_seed(std::uint64_t seed, std::size_t delta_index, int replicate) {
  // splitmix64 finalizer over a packed (seed, delta, replicate) key
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + (static_cast<std::uint64_t>(delta_index) << 32) +
                    static_cast<std::uint64_t>(replicate) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  require(count >= 1, "linspace: count must be positive");
  if (count == 1) return {lo};
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  v.back() = hi;
  return v;
}

Curve distance_curve(const LinearOperator& X, const Bias& J, const Vector& y_obs, const SolverConfig& cfg,
                     const Vector& w_ref) {
  cfg.validate();
  require(static_cast<std::size_t>(w_ref.size()) == X.in_dim(), "distance_curve: reference has wrong length");
  auto state = PdState::zeros(X.in_dim(), X.out_dim());
  Curve curve;
  curve.reserve(static_cast<std::size_t>(cfg.max_iter / cfg.record_every + 2));
  curve.emplace_back(0, (state.w - w_ref).norm());
  for (long k = 1; k <= cfg.max_iter; ++k) {
    step_inplace(state, X, J, y_obs, cfg);
    if (k % cfg.record_every == 0 || k == cfg.max_iter) curve.emplace_back(k, (state.w - w_ref).norm());
  }
  return curve;
}

SemiconvResult run_semiconv(const ExperimentSpec& spec) {
  require(spec.name == "semiconv", "run_semiconv: spec.name must be semiconv");
  spec.validate();
  const auto prob = sparse_problem(spec);
  return semiconv_common(spec, prob, Bias::l1(), deltas_or(spec, {0.6, 1.2, 2.4}), "semiconv",
                         "Sparse recovery: distance to the noiseless solution");
}

SemiconvResult run_matcomp(const ExperimentSpec& spec) {
  require(spec.name == "matcomp", "run_matcomp: spec.name must be matcomp");
  spec.validate();
  const auto prob = matcomp_problem(spec);
  const Bias J = Bias::nuclear(spec.matcomp.d, spec.matcomp.d);
  return semiconv_common(spec, prob, J, deltas_or(spec, {2.0, 4.0, 8.0}), "matcomp",
                         "Matrix completion: distance to the noiseless solution");
}

StoptimeResult run_stoptime(const ExperimentSpec& spec) {
  require(spec.name == "stoptime", "run_stoptime: spec.name must be stoptime");
  spec.validate();
  ensure_dir(spec.out_dir);
  const auto deltas = deltas_or(spec, linspace(0.1, 6.0, 20));
  if (deltas.size() > 1) {
    const auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
    require(*lo > 0.0 && *hi >= 10.0 * *lo, "stoptime: delta list must be positive and span a factor 10");
  }

  const auto prob = sparse_problem(spec);
  const Bias J = Bias::l1();
  const auto cfg = solver_for(prob.X, spec, spec.epsilon, iterations_or(spec, 5000));
  const auto cert = certify(prob.X, J, prob.y, cfg);

  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  StoptimeResult out;
  out.deltas = deltas;
  out.runs.resize(deltas.size() * reps);
  detail::parallel_for(out.runs.size(), spec.threads, [&](std::size_t i) {
    const std::size_t di = i / reps;
    const int rep = static_cast<int>(i % reps);
    const std::uint64_t nseed = noise_seed(spec.seed, di, rep);
    const Vector y_obs = deltas[di] > 0.0 ? add_noise(prob, deltas[di], nseed).y_delta : prob.y;
    // k* ranges over iterates k >= 1 so that 1/k* is defined
    out.runs[i] = summarize(distance_curve(prob.X, J, y_obs, cfg, cert.w_star), deltas[di], rep, nseed, 1);
  });

  for (std::size_t di = 0; di < deltas.size(); ++di) {
    double inv = 0.0, k = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      inv += 1.0 / static_cast<double>(out.runs[di * reps + r].k_star);
      k += static_cast<double>(out.runs[di * reps + r].k_star);
    }
    out.mean_inv_k.push_back(inv / static_cast<double>(reps));
    out.mean_k.push_back(k / static_cast<double>(reps));
  }
  out.fit = fit_line(out.deltas, out.mean_inv_k);
  if (out.fit) {
    const auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
    const double range = std::abs(out.fit->slope) * (*hi - *lo);
    if (range > 0.0) out.relative_intercept = out.fit->intercept / range;
  }

  CsvTable runs({"delta", "replicate", "noise_seed", "k_star", "d_min"});
  for (const auto& r : out.runs)
    runs.add_row({format_number(r.delta), std::to_string(r.replicate), std::to_string(r.noise_seed),
                  std::to_string(r.k_star), format_number(r.d_min)});
  runs.write(spec.out_dir / "stoptime_runs.csv");

  CsvTable means({"delta", "mean_inv_k", "mean_k"});
  for (std::size_t di = 0; di < deltas.size(); ++di)
    means.add_numbers({deltas[di], out.mean_inv_k[di], out.mean_k[di]});
  means.write(spec.out_dir / "stoptime.csv");

  CsvTable fit({"applicable", "slope", "intercept", "pearson_r", "relative_intercept"});
  if (out.fit)
    fit.add_row({"1", format_number(out.fit->slope), format_number(out.fit->intercept),
                 format_number(out.fit->pearson_r), format_number(out.relative_intercept.value_or(NAN))});
  else
    fit.add_row({"0", "", "", "", ""});
  fit.write(spec.out_dir / "stoptime_fit.csv");

  std::vector<Series> series{{"mean 1/k*", out.deltas, out.mean_inv_k, true}};
  if (out.fit) {
    Series line{"least-squares fit", out.deltas, {}, false};
    for (double d : out.deltas) line.y.push_back(out.fit->intercept + out.fit->slope * d);
    series.push_back(std::move(line));
  }
  write_line_plot(spec.out_dir / "stoptime.svg", {"Empirical stopping time", "delta", "mean 1/k*", false},
                  series);
  return out;
}

BoundsResult run_bounds(const ExperimentSpec& spec) {
  require(spec.name == "bounds", "run_bounds: spec.name must be bounds");
  spec.validate();
  ensure_dir(spec.out_dir);
  const auto epsilons = spec.epsilons.empty() ? std::vector<double>{0.25, 0.5, 0.9} : spec.epsilons;
  const auto deltas = deltas_or(spec, {0.0});
  const long iters = iterations_or(spec, 5000);

  const auto prob = sparse_problem(spec);
  const Bias J = Bias::l1();
  const auto cert = certify(prob.X, J, prob.y, solver_for(prob.X, spec, spec.epsilon, iters));

  struct Task {
    double eps;
    std::size_t di;
    int rep;
  };
  std::vector<Task> tasks;
  for (double eps : epsilons)
    for (std::size_t di = 0; di < deltas.size(); ++di)
      for (int r = 0; r < (deltas[di] > 0.0 ? spec.replicates : 1); ++r) tasks.push_back({eps, di, r});

  struct Rows {
    BoundsCase summary;
    std::vector<std::array<double, 5>> rows;  // k, gap, gap_bound, feas, feas_bound
  };
  std::vector<Rows> results(tasks.size());
  detail::parallel_for(tasks.size(), spec.threads, [&](std::size_t i) {
    const auto& t = tasks[i];
    const double delta = deltas[t.di];
    const Vector y_obs = delta > 0.0 ? add_noise(prob, delta, noise_seed(spec.seed, t.di, t.rep)).y_delta : prob.y;
    const auto cfg = solver_for(prob.X, spec, t.eps, iters);
    RunOptions opts;
    opts.y_clean = &prob.y;
    opts.reference = &cert;
    opts.log_averages = true;
    const auto log = run(prob.X, J, y_obs, cfg, opts);

    const BoundInputs b{initial_v(Vector::Zero(static_cast<Eigen::Index>(prob.X.in_dim())),
                                  Vector::Zero(static_cast<Eigen::Index>(prob.X.out_dim())), cert, cfg.tau,
                                  cfg.sigma),
                        cfg.sigma, t.eps, delta};
    Rows r;
    r.summary = {t.eps, delta, t.rep, 0.0, 0.0, 0};
    for (const auto& row : log.rows) {
      if (row.k < 1) continue;
      const double g = *row.gap_avg;
      const double f = *row.res_avg_clean * *row.res_avg_clean;
      const double gb = stability_gap_bound(row.k, b);
      const double fb = stability_feas_bound(row.k, b);
      r.summary.max_gap_ratio = std::max(r.summary.max_gap_ratio, g / gb);
      r.summary.max_feas_ratio = std::max(r.summary.max_feas_ratio, f / fb);
      if (g > gb * (1.0 + kBoundSlack) || f > fb * (1.0 + kBoundSlack)) ++r.summary.violations;
      r.rows.push_back({static_cast<double>(row.k), g, gb, f, fb});
    }
    results[i] = std::move(r);
  });

  BoundsResult out;
  CsvTable table({"epsilon", "delta", "replicate", "k", "gap", "gap_bound", "feas", "feas_bound", "violated"});
  CsvTable summary({"epsilon", "delta", "replicate", "max_gap_ratio", "max_feas_ratio", "violations"});
  for (const auto& r : results) {
    const auto& s = r.summary;
    for (const auto& row : r.rows) {
      const bool bad = row[1] > row[2] * (1.0 + kBoundSlack) || row[3] > row[4] * (1.0 + kBoundSlack);
      table.add_row({format_number(s.epsilon), format_number(s.delta), std::to_string(s.replicate),
                     std::to_string(static_cast<long>(row[0])), format_number(row[1]), format_number(row[2]),
                     format_number(row[3]), format_number(row[4]), bad ? "1" : "0"});
    }
    summary.add_row({format_number(s.epsilon), format_number(s.delta), std::to_string(s.replicate),
                     format_number(s.max_gap_ratio), format_number(s.max_feas_ratio),
                     std::to_string(s.violations)});
    out.cases.push_back(s);
    out.violations += s.violations;
  }
  table.write(spec.out_dir / "bounds.csv");
  summary.write(spec.out_dir / "bounds_summary.csv");
  if (out.violations > 0)
    throw BoundViolation("bounds: " + std::to_string(out.violations) +
                         " iterations exceed a theoretical bound (see bounds.csv)");
  return out;
}

PathcmpResult run_pathcmp(const ExperimentSpec& spec) {
  require(spec.name == "pathcmp", "run_pathcmp: spec.name must be pathcmp");
  spec.validate();
  ensure_dir(spec.out_dir);
  const auto& pp = spec.path;
  const long iters = iterations_or(spec, 1000);

  const auto clean = gen_sparse(pp.n, pp.p, pp.s, pp.corr, pp.y_norm, spec.seed);
  const Vector y = pp.noise > 0.0 ? add_noise(clean, pp.noise, noise_seed(spec.seed, 0, 0)).y_delta : clean.y;
  const RowMatrix& X = clean.X.matrix();

  std::vector<std::size_t> perm(pp.n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = make_rng(spec.seed, 3);
  for (std::size_t i = pp.n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }

  struct Fold {
    std::vector<double> cp;
    std::vector<double> lasso;
    std::vector<long> inner;
  };
  std::vector<Fold> folds(pp.folds);
  detail::parallel_for(pp.folds, spec.threads, [&](std::size_t f) {
    const std::size_t lo = f * pp.n / pp.folds, hi = (f + 1) * pp.n / pp.folds;
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                  perm.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(lo));
    train.insert(train.end(), perm.begin() + static_cast<std::ptrdiff_t>(hi), perm.end());
    const RowMatrix Xte = select_rows(X, test);
    const Vector yte = select_entries(y, test);
    const auto Xtr = LinearOperator::dense(select_rows(X, train));
    const Vector ytr = select_entries(y, train);

    Fold& out = folds[f];
    const auto cfg = solver_for(Xtr, spec, spec.epsilon, iters);
    auto state = PdState::zeros(Xtr.in_dim(), Xtr.out_dim());
    out.cp.push_back(mse(Xte, state.w, yte));
    for (long k = 1; k <= iters; ++k) {
      step_inplace(state, Xtr, Bias::l1(), ytr, cfg);
      out.cp.push_back(mse(Xte, state.w, yte));
    }

    const auto grid = lambda_grid(Xtr, ytr, pp.grid_count, pp.span_decades);
    const auto path = lasso_path(Xtr, ytr, grid, pp.lasso_tol, pp.lasso_max_iter);
    for (const auto& w : path.solutions) out.lasso.push_back(mse(Xte, w, yte));
    out.inner = path.inner_iters;
  });

  PathcmpResult r;
  const double nf = static_cast<double>(pp.folds);
  r.cp_mse.assign(folds[0].cp.size(), 0.0);
  r.lasso_mse.assign(folds[0].lasso.size(), 0.0);
  for (const auto& f : folds) {
    for (std::size_t k = 0; k < f.cp.size(); ++k) r.cp_mse[k] += f.cp[k] / nf;
    for (std::size_t t = 0; t < f.lasso.size(); ++t) r.lasso_mse[t] += f.lasso[t] / nf;
  }
  for (int t = 0; t < pp.grid_count; ++t)
    r.lambda_ratio.push_back(std::pow(10.0, -pp.span_decades * t / (pp.grid_count - 1)));

  r.cp_best_k = std::min_element(r.cp_mse.begin(), r.cp_mse.end()) - r.cp_mse.begin();
  r.cp_best_mse = r.cp_mse[static_cast<std::size_t>(r.cp_best_k)];
  r.lasso_best_t = static_cast<int>(std::min_element(r.lasso_mse.begin(), r.lasso_mse.end()) - r.lasso_mse.begin());
  r.lasso_best_mse = r.lasso_mse[static_cast<std::size_t>(r.lasso_best_t)];
  r.zero_mse = r.cp_mse.front();
  r.cp_iters_to_best = r.cp_best_k * static_cast<long>(pp.folds);
  for (const auto& f : folds)
    for (std::size_t t = 0; t < f.inner.size(); ++t) {
      r.path_iters_total += f.inner[t];
      if (static_cast<int>(t) <= r.lasso_best_t) r.path_iters_to_best += f.inner[t];
    }

  std::vector<std::string> cp_head{"k", "mse_mean"}, la_head{"t", "lambda_ratio", "mse_mean", "inner_iters"};
  for (std::size_t f = 0; f < pp.folds; ++f) {
    cp_head.push_back("mse_fold" + std::to_string(f));
    la_head.push_back("mse_fold" + std::to_string(f));
  }
  CsvTable cp(cp_head), la(la_head);
  for (std::size_t k = 0; k < r.cp_mse.size(); ++k) {
    std::vector<double> row{static_cast<double>(k), r.cp_mse[k]};
    for (const auto& f : folds) row.push_back(f.cp[k]);
    cp.add_numbers(row);
  }
  for (std::size_t t = 0; t < r.lasso_mse.size(); ++t) {
    long inner = 0;
    for (const auto& f : folds) inner += f.inner[t];
    std::vector<double> row{static_cast<double>(t), r.lambda_ratio[t], r.lasso_mse[t], static_cast<double>(inner)};
    for (const auto& f : folds) row.push_back(f.lasso[t]);
    la.add_numbers(row);
  }
  cp.write(spec.out_dir / "pathcmp_cp.csv");
  la.write(spec.out_dir / "pathcmp_lasso.csv");

  CsvTable summary({"cp_best_k", "cp_best_mse", "cp_final_mse", "lasso_best_t", "lasso_best_lambda_ratio",
                    "lasso_best_mse", "lasso_final_mse", "zero_mse", "cp_iters_to_best", "path_iters_to_best",
                    "path_iters_total"});
  summary.add_numbers({static_cast<double>(r.cp_best_k), r.cp_best_mse, r.cp_mse.back(),
                       static_cast<double>(r.lasso_best_t), r.lambda_ratio[static_cast<std::size_t>(r.lasso_best_t)],
                       r.lasso_best_mse, r.lasso_mse.back(), r.zero_mse, static_cast<double>(r.cp_iters_to_best),
                       static_cast<double>(r.path_iters_to_best), static_cast<double>(r.path_iters_total)});
  summary.write(spec.out_dir / "pathcmp_summary.csv");

  std::vector<double> ks(r.cp_mse.size()), ts(r.lasso_mse.size());
  std::iota(ks.begin(), ks.end(), 0.0);
  std::iota(ts.begin(), ts.end(), 0.0);
  write_line_plot(spec.out_dir / "pathcmp_cp.svg", {"Early-stopped path: held-out MSE", "iteration k", "MSE", true},
                  {{"fold mean", ks, r.cp_mse, false},
                   {"best", {static_cast<double>(r.cp_best_k)}, {r.cp_best_mse}, true}});
  write_line_plot(spec.out_dir / "pathcmp_lasso.svg",
                  {"Lasso path: held-out MSE", "grid index t (lambda = 10^(-3t/99) lambda_max)", "MSE", true},
                  {{"fold mean", ts, r.lasso_mse, false},
                   {"best", {static_cast<double>(r.lasso_best_t)}, {r.lasso_best_mse}, true}});
  return r;
}

TvResult run_tv_demo(const ExperimentSpec& spec) {
  require(spec.name == "tv-demo", "run_tv_demo: spec.name must be tv-demo");
  spec.validate();
  ensure_dir(spec.out_dir);
  const std::size_t side = spec.tv.side, pix = side * side;
  const auto rows = static_cast<std::size_t>(std::max(1.0, std::round(spec.tv.ratio * static_cast<double>(pix))));
  const double delta = spec.deltas.empty() ? 0.5 : spec.deltas.front();

  auto rng = make_rng(spec.seed, 4);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
  RowMatrix A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(pix));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = gauss(rng);

  const Vector truth = tv_phantom(side);
  auto X = LinearOperator::dense(std::move(A));
  Vector y = X.apply(truth);
  NoisyProblem prob{X, y, y, 0.0, truth, spec.seed, "tv", {}};
  const Vector y_obs = delta > 0.0 ? add_noise(prob, delta, noise_seed(spec.seed, 0, 0)).y_delta : prob.y;

  const auto tv = tv_reformulate(prob.X, y_obs, side, side);
  const auto cfg = solver_for(tv.op, spec, spec.epsilon, iterations_or(spec, 2000));
  const auto grad = LinearOperator::grad2d(side, side);
  const auto total_variation = [&](const Vector& img) { return grad.apply(img).lpNorm<1>(); };

  auto state = PdState::zeros(tv.op.in_dim(), tv.op.out_dim());
  CsvTable curve({"k", "distance", "tv"});
  std::vector<double> xs, ys;
  Vector best = state.w.head(static_cast<Eigen::Index>(pix));
  TvResult r;
  r.d_first = r.d_min = (best - truth).norm();
  curve.add_numbers({0.0, r.d_first, 0.0});
  xs.push_back(0.0);
  ys.push_back(r.d_first);
  for (long k = 1; k <= cfg.max_iter; ++k) {
    step_inplace(state, tv.op, tv.bias, tv.y, cfg);
    const Vector img = state.w.head(static_cast<Eigen::Index>(pix));
    const double d = (img - truth).norm();
    if (d < r.d_min) {
      r.d_min = d;
      r.k_best = k;
      best = img;
    }
    r.d_last = d;
    if (k % cfg.record_every == 0 || k == cfg.max_iter) {
      curve.add_numbers({static_cast<double>(k), d, total_variation(img)});
      xs.push_back(static_cast<double>(k));
      ys.push_back(d);
    }
  }
  r.tv_truth = total_variation(truth);
  r.tv_best = total_variation(best);

  curve.write(spec.out_dir / "tv_curve.csv");
  write_matrix_csv(spec.out_dir / "tv_truth.csv", as_grid(truth, side));
  write_matrix_csv(spec.out_dir / "tv_best.csv", as_grid(best, side));
  write_matrix_csv(spec.out_dir / "tv_final.csv", as_grid(state.w.head(static_cast<Eigen::Index>(pix)), side));
  write_line_plot(spec.out_dir / "tv_curve.svg",
                  {"Total variation: distance to the true image", "iteration k", "||W_k - W_true||", true},
                  {{"delta " + format_number(delta), xs, ys, false},
                   {"best", {static_cast<double>(r.k_best)}, {r.d_min}, true}});
  return r;
}

SolveResult run_solve(const ExperimentSpec& spec) {
  require(spec.name == "solve", "run_solve: spec.name must be solve");
  spec.validate();
  ensure_dir(spec.out_dir);

  const NoisyProblem prob = [&] {
    if (spec.problem_dir) return load_problem(*spec.problem_dir);
    auto generated = spec.bias == "nuclear" ? matcomp_problem(spec) : sparse_problem(spec);
    if (!spec.deltas.empty() && spec.deltas.front() > 0.0)
      return add_noise(generated, spec.deltas.front(), noise_seed(spec.seed, 0, 0));
    return generated;
  }();
  const Bias J = bias_by_name(spec.bias, prob.X);
  auto cfg = solver_for(prob.X, spec, spec.epsilon, iterations_or(spec, 1000));

  std::optional<SaddleCertificate> cert;
  if (spec.stop_rule == "oracle") cert = certify(prob.X, J, prob.y, cfg);

  RunOptions opts;
  opts.y_clean = &prob.y;
  opts.reference = cert ? &*cert : nullptr;
  opts.log_averages = false;

  SolveResult r;
  r.log = run(prob.X, J, prob.y_delta, cfg, opts);
  r.w = r.log.final_state.w;

  if (spec.stop_rule == "oracle") {
    r.stop_k = oracle_stop(r.log).k;
  } else if (spec.stop_rule == "discrepancy") {
    r.stop_k = discrepancy_stop(r.log, spec.rule_param > 0.0 ? spec.rule_param : 1.1, prob.delta);
  } else if (spec.stop_rule == "budget") {
    r.stop_k = apply_rule(BudgetRule{spec.rule_param > 0.0 ? spec.rule_param : 1.0}, r.log, prob.delta);
  } else {
    require(spec.stop_rule == "none", "unknown stop rule '" + spec.stop_rule + "'");
  }
  if (r.stop_k && *r.stop_k < r.log.final_state.k) {
    auto short_cfg = cfg;
    short_cfg.max_iter = *r.stop_k;
    RunOptions plain;
    plain.log_averages = false;
    r.w = run(prob.X, J, prob.y_delta, short_cfg, plain).final_state.w;
  }

  write_log_csv(spec.out_dir / "log.csv", r.log);
  write_vector_csv(spec.out_dir / "w.csv", r.w);
  return r;
}

ExperimentSpec spec_from_json(const std::string& name, const std::string& options_json) {
  ExperimentSpec spec;
  spec.name = name;
  nlohmann::json j = options_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(options_json, nullptr, false);
  require(!j.is_discarded(), "options are not valid JSON");
  try {
    check_keys(j,
               {"seed", "out_dir", "epsilon", "epsilons", "max_iter", "record_every", "deltas", "replicates",
                "threads", "problem_dir", "bias", "stop_rule", "rule_param", "sparse", "matcomp", "path", "tv"},
               "options");
    read_if(j, "seed", spec.seed);
    if (j.contains("out_dir")) spec.out_dir = j.at("out_dir").get<std::string>();
    read_if(j, "epsilon", spec.epsilon);
    read_if(j, "epsilons", spec.epsilons);
    if (j.contains("max_iter")) spec.max_iter = j.at("max_iter").get<long>();
    read_if(j, "record_every", spec.record_every);
    read_if(j, "deltas", spec.deltas);
    read_if(j, "replicates", spec.replicates);
    read_if(j, "threads", spec.threads);
    if (j.contains("problem_dir")) spec.problem_dir = j.at("problem_dir").get<std::string>();
    read_if(j, "bias", spec.bias);
    read_if(j, "stop_rule", spec.stop_rule);
    read_if(j, "rule_param", spec.rule_param);
    if (j.contains("sparse")) {
      const auto& s = j.at("sparse");
      check_keys(s, {"n", "p", "s", "corr", "y_norm"}, "sparse");
      read_if(s, "n", spec.sparse.n);
      read_if(s, "p", spec.sparse.p);
      read_if(s, "s", spec.sparse.s);
      read_if(s, "corr", spec.sparse.corr);
      read_if(s, "y_norm", spec.sparse.y_norm);
    }
    if (j.contains("matcomp")) {
      const auto& m = j.at("matcomp");
      check_keys(m, {"d", "r", "denom", "y_norm"}, "matcomp");
      read_if(m, "d", spec.matcomp.d);
      read_if(m, "r", spec.matcomp.r);
      read_if(m, "denom", spec.matcomp.denom);
      read_if(m, "y_norm", spec.matcomp.y_norm);
    }
    if (j.contains("path")) {
      const auto& p = j.at("path");
      check_keys(p,
                 {"n", "p", "s", "corr", "y_norm", "noise", "folds", "grid_count", "span_decades", "lasso_tol",
                  "lasso_max_iter"},
                 "path");
      read_if(p, "n", spec.path.n);
      read_if(p, "p", spec.path.p);
      read_if(p, "s", spec.path.s);
      read_if(p, "corr", spec.path.corr);
      read_if(p, "y_norm", spec.path.y_norm);
      read_if(p, "noise", spec.path.noise);
      read_if(p, "folds", spec.path.folds);
      read_if(p, "grid_count", spec.path.grid_count);
      read_if(p, "span_decades", spec.path.span_decades);
      read_if(p, "lasso_tol", spec.path.lasso_tol);
      read_if(p, "lasso_max_iter", spec.path.lasso_max_iter);
    }
    if (j.contains("tv")) {
      const auto& t = j.at("tv");
      check_keys(t, {"side", "ratio"}, "tv");
      read_if(t, "side", spec.tv.side);
      read_if(t, "ratio", spec.tv.ratio);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("bad option value: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  nlohmann::json j;
  j["experiment"] = spec.name;
  j["seed"] = spec.seed;
  j["out_dir"] = spec.out_dir.string();
  if (spec.name == "semiconv") {
    j["result"] = semiconv_json(run_semiconv(spec));
  } else if (spec.name == "matcomp") {
    j["result"] = semiconv_json(run_matcomp(spec));
  } else if (spec.name == "stoptime") {
    const auto r = run_stoptime(spec);
    j["result"] = {{"deltas", r.deltas}, {"mean_inv_k", r.mean_inv_k}, {"mean_k", r.mean_k}};
    if (r.fit)
      j["result"]["fit"] = {{"slope", r.fit->slope}, {"intercept", r.fit->intercept},
                            {"pearson_r", r.fit->pearson_r}, {"relative_intercept", r.relative_intercept.value_or(NAN)}};
    else
      j["result"]["fit"] = "not applicable";
  } else if (spec.name == "bounds") {
    const auto r = run_bounds(spec);
    j["result"]["violations"] = r.violations;
    j["result"]["cases"] = nlohmann::json::array();
    for (const auto& c : r.cases)
      j["result"]["cases"].push_back({{"epsilon", c.epsilon}, {"delta", c.delta}, {"replicate", c.replicate},
                                      {"max_gap_ratio", c.max_gap_ratio}, {"max_feas_ratio", c.max_feas_ratio},
                                      {"violations", c.violations}});
  } else if (spec.name == "pathcmp") {
    const auto r = run_pathcmp(spec);
    j["result"] = {{"cp_best_k", r.cp_best_k},
                   {"cp_best_mse", r.cp_best_mse},
                   {"cp_final_mse", r.cp_mse.back()},
                   {"lasso_best_t", r.lasso_best_t},
                   {"lasso_best_mse", r.lasso_best_mse},
                   {"lasso_final_mse", r.lasso_mse.back()},
                   {"zero_mse", r.zero_mse},
                   {"cp_iters_to_best", r.cp_iters_to_best},
                   {"path_iters_to_best", r.path_iters_to_best},
                   {"path_iters_total", r.path_iters_total}};
  } else if (spec.name == "tv-demo") {
    const auto r = run_tv_demo(spec);
    j["result"] = {{"k_best", r.k_best}, {"d_first", r.d_first}, {"d_min", r.d_min},
                   {"d_last", r.d_last}, {"tv_truth", r.tv_truth}, {"tv_best", r.tv_best}};
  } else {
    const auto r = run_solve(spec);
    const auto& last = r.log.rows.back();
    j["result"] = {{"iterations", r.log.final_state.k}, {"res_noisy", last.res_noisy},
                   {"res_clean", last.res_clean}, {"j_val", last.j_val}};
    if (r.stop_k) j["result"]["stop_k"] = *r.stop_k;
  }
  return j.dump();
}

}  // namespace iterreg
