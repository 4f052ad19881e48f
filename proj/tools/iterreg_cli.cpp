// Command-line front end. Everything goes through the C interface of the
// shared library; experiment options are forwarded as a JSON object.

#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iterreg/iterreg.h"

namespace {

using json = nlohmann::json;

int exit_code(iterreg_status s) {
  switch (s) {
    case ITERREG_OK: return 0;
    case ITERREG_ERR_ASSUMPTION: return 2;
    case ITERREG_ERR_BOUND_VIOLATION: return 3;
    default: return 1;
  }
}

int report(iterreg_status s, const char* what) {
  if (s != ITERREG_OK)
    std::cerr << "iterreg " << what << ": " << iterreg_status_name(s) << ": " << iterreg_last_error() << '\n';
  return exit_code(s);
}

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

struct Common {
  std::optional<unsigned long long> seed;
  std::string out = "out";
  std::optional<double> eps;
  std::optional<long> max_iter;
  std::optional<long> record_every;
  std::vector<double> deltas;
  std::optional<int> replicates;
  std::optional<unsigned> threads;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_option("--eps", eps, "Step-size product epsilon in (0, 1)");
    app->add_option("--max-iter", max_iter, "Iterations per run");
    app->add_option("--record-every", record_every, "Logging stride");
    app->add_option("--delta", deltas, "Noise level (repeatable)")->take_all();
    app->add_option("--replicates", replicates, "Noise draws per delta");
    app->add_option("--threads", threads, "Worker threads (0: all cores)");
  }

  json options() const {
    json j = json::object();
    j["out_dir"] = out;
    put(j, "seed", seed);
    put(j, "epsilon", eps);
    put(j, "max_iter", max_iter);
    put(j, "record_every", record_every);
    if (!deltas.empty()) j["deltas"] = deltas;
    put(j, "replicates", replicates);
    put(j, "threads", threads);
    return j;
  }
};

struct SparseFlags {
  std::optional<std::size_t> n, p, s;
  std::optional<double> corr, y_norm;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "Rows of X");
    app->add_option("--p", p, "Columns of X");
    app->add_option("--s", s, "Nonzeros of the generating vector");
    app->add_option("--corr", corr, "Column correlation base");
    app->add_option("--y-norm", y_norm, "Norm of the clean data");
  }

  json options() const {
    json j = json::object();
    put(j, "n", n);
    put(j, "p", p);
    put(j, "s", s);
    put(j, "corr", corr);
    put(j, "y_norm", y_norm);
    return j;
  }
};

struct MatcompFlags {
  std::optional<std::size_t> d, r, denom;
  std::optional<double> y_norm;

  void attach(CLI::App* app, bool with_norm) {
    app->add_option("--d", d, "Matrix side");
    app->add_option("--r", r, "Rank");
    app->add_option("--denom", denom, "Observe floor(d^2 / denom) entries");
    if (with_norm) app->add_option("--y-norm", y_norm, "Frobenius norm of the clean matrix");
  }

  json options() const {
    json j = json::object();
    put(j, "d", d);
    put(j, "r", r);
    put(j, "denom", denom);
    put(j, "y_norm", y_norm);
    return j;
  }
};

int run_experiment(const std::string& name, const json& options) {
  char* summary = nullptr;
  const auto s = iterreg_experiment_run(name.c_str(), options.dump().c_str(), &summary);
  if (s == ITERREG_OK) {
    std::cout << json::parse(summary).dump(2) << '\n';
    iterreg_string_free(summary);
  }
  return report(s, name.c_str());
}

// Generates (or loads) a problem for the certify and gen subcommands.
iterreg_status make_problem(const std::string& kind, const std::optional<std::string>& dir,
                            const SparseFlags& sp, const MatcompFlags& mc, unsigned long long seed,
                            iterreg_problem** out) {
  if (dir) return iterreg_problem_load(dir->c_str(), out);
  if (kind == "matcomp")
    return iterreg_problem_gen_matcomp(mc.d.value_or(20), mc.r.value_or(5), mc.denom.value_or(5),
                                       sp.y_norm.value_or(20.0), seed, out);
  return iterreg_problem_gen_sparse(sp.n.value_or(200), sp.p.value_or(500), sp.s.value_or(75),
                                    sp.corr.value_or(0.2), sp.y_norm.value_or(20.0), seed, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual iterative regularization: solver and experiment harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(iterreg_version()));
  std::function<int()> action;

  // solve
  Common solve_c;
  SparseFlags solve_sp;
  MatcompFlags solve_mc;
  std::optional<std::string> solve_problem, solve_bias, solve_rule;
  std::optional<double> solve_rule_param;
  auto* solve = app.add_subcommand("solve", "Run the iteration on a stored or generated problem");
  solve_c.attach(solve);
  solve_sp.attach(solve);
  solve_mc.attach(solve, false);
  solve->add_option("--problem", solve_problem, "Problem directory (see gen)");
  solve->add_option("--bias", solve_bias, "l1 | sq_l2 | nuclear");
  solve->add_option("--stop-rule", solve_rule, "none | oracle | discrepancy | budget");
  solve->add_option("--rule-param", solve_rule_param, "tau_d for discrepancy, c for budget");
  solve->callback([&] {
    action = [&] {
      json j = solve_c.options();
      j["sparse"] = solve_sp.options();
      j["matcomp"] = solve_mc.options();
      if (solve_sp.y_norm) j["matcomp"]["y_norm"] = *solve_sp.y_norm;
      put(j, "problem_dir", solve_problem);
      put(j, "bias", solve_bias);
      put(j, "stop_rule", solve_rule);
      put(j, "rule_param", solve_rule_param);
      return run_experiment("solve", j);
    };
  });

  // certify
  std::string cert_kind = "sparse", cert_bias = "l1", cert_out = "certificate";
  std::optional<std::string> cert_problem;
  SparseFlags cert_sp;
  MatcompFlags cert_mc;
  unsigned long long cert_seed = 0;
  double cert_eps = 0.99, cert_subgrad = -1.0, cert_feas = -1.0;
  long cert_max_iter = 0;
  auto* cert = app.add_subcommand("certify", "Compute a saddle-point certificate on clean data");
  cert->add_option("--problem", cert_problem, "Problem directory (see gen)");
  cert->add_option("--kind", cert_kind, "sparse | matcomp when generating")->check(CLI::IsMember({"sparse", "matcomp"}));
  cert->add_option("--bias", cert_bias, "l1 | sq_l2 | nuclear")->check(CLI::IsMember({"l1", "sq_l2", "nuclear"}));
  cert->add_option("--seed", cert_seed, "Generator seed");
  cert->add_option("--eps", cert_eps, "Step-size product epsilon");
  cert->add_option("--max-iter", cert_max_iter, "Iteration cap (0: library default)");
  cert->add_option("--feas-tol", cert_feas, "Feasibility tolerance (negative: default)");
  cert->add_option("--subgrad-tol", cert_subgrad, "Subgradient tolerance (negative: default)");
  cert->add_option("--out", cert_out, "Output directory")->capture_default_str();
  cert_sp.attach(cert);
  cert_mc.attach(cert, false);
  cert->callback([&] {
    action = [&]() -> int {
      iterreg_problem* prob = nullptr;
      iterreg_operator* op = nullptr;
      iterreg_bias* bias = nullptr;
      iterreg_certificate* c = nullptr;
      auto cleanup = [&] {
        iterreg_certificate_free(c);
        iterreg_bias_free(bias);
        iterreg_operator_free(op);
        iterreg_problem_free(prob);
      };
      auto s = make_problem(cert_kind, cert_problem, cert_sp, cert_mc, cert_seed, &prob);
      size_t n = 0, p = 0;
      if (s == ITERREG_OK) s = iterreg_problem_dims(prob, &n, &p);
      if (s == ITERREG_OK) s = iterreg_problem_operator(prob, &op);
      if (s == ITERREG_OK) {
        if (cert_bias == "l1") {
          s = iterreg_bias_l1(&bias);
        } else if (cert_bias == "sq_l2") {
          s = iterreg_bias_sq_l2(0.5, &bias);
        } else {
          const std::size_t side = cert_kind == "matcomp" ? cert_mc.d.value_or(20) : 0;
          s = iterreg_bias_nuclear(side, side, &bias);
        }
      }
      std::vector<double> y(n);
      if (s == ITERREG_OK) s = iterreg_problem_data(prob, 0, y.data(), y.size());
      if (s == ITERREG_OK) {
        iterreg_solver_options so;
        iterreg_solver_options_default(&so);
        so.epsilon = cert_eps;
        iterreg_certify_options co;
        iterreg_certify_options_default(&co);
        if (cert_max_iter > 0) co.max_iter = cert_max_iter;
        if (cert_feas >= 0.0) co.feas_tol = cert_feas;
        if (cert_subgrad >= 0.0) co.subgrad_tol = cert_subgrad;
        s = iterreg_certify(op, bias, y.data(), n, &so, &co, &c);
      }
      if (s == ITERREG_OK) s = iterreg_certificate_save(c, cert_out.c_str());
      if (s == ITERREG_OK) {
        double feas = 0, sub = 0, jstar = 0;
        long iters = 0;
        iterreg_certificate_info(c, &feas, &sub, &iters, &jstar);
        std::cout << json{{"feas_res", feas}, {"subgrad_res", sub}, {"iterations", iters}, {"j_star", jstar},
                          {"out_dir", cert_out}}
                         .dump(2)
                  << '\n';
      }
      cleanup();
      return report(s, "certify");
    };
  });

  // gen
  std::string gen_kind = "sparse", gen_out = "problem";
  SparseFlags gen_sp;
  MatcompFlags gen_mc;
  unsigned long long gen_seed = 0;
  double gen_delta = 0.0;
  auto* gen = app.add_subcommand("gen", "Generate a problem directory");
  gen->add_option("--kind", gen_kind, "sparse | matcomp")->check(CLI::IsMember({"sparse", "matcomp"}));
  gen->add_option("--seed", gen_seed, "Generator seed (noise uses seed + 1)");
  gen->add_option("--delta", gen_delta, "Noise level");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen_sp.attach(gen);
  gen_mc.attach(gen, false);
  gen->callback([&] {
    action = [&]() -> int {
      iterreg_problem* prob = nullptr;
      iterreg_problem* noisy = nullptr;
      auto s = make_problem(gen_kind, std::nullopt, gen_sp, gen_mc, gen_seed, &prob);
      if (s == ITERREG_OK && gen_delta > 0.0) s = iterreg_problem_add_noise(prob, gen_delta, gen_seed + 1, &noisy);
      if (s == ITERREG_OK) s = iterreg_problem_save(noisy ? noisy : prob, gen_out.c_str());
      iterreg_problem_free(noisy);
      iterreg_problem_free(prob);
      if (s == ITERREG_OK) std::cout << gen_out << '\n';
      return report(s, "gen");
    };
  });

  // semiconv, stoptime, bounds: the sparse-recovery family
  struct SparseExperiment {
    Common c;
    SparseFlags sp;
    std::vector<double> eps_sweep;
  };
  SparseExperiment semiconv_x, stoptime_x, bounds_x;
  const auto sparse_cmd = [&](const char* name, const char* help, SparseExperiment& x) {
    auto* cmd = app.add_subcommand(name, help);
    x.c.attach(cmd);
    x.sp.attach(cmd);
    if (std::string(name) == "bounds")
      cmd->add_option("--eps-sweep", x.eps_sweep, "Epsilon values to check (repeatable)")->take_all();
    cmd->callback([&, name] {
      action = [&, name] {
        json j = x.c.options();
        j["sparse"] = x.sp.options();
        if (!x.eps_sweep.empty()) j["epsilons"] = x.eps_sweep;
        return run_experiment(name, j);
      };
    });
  };
  sparse_cmd("semiconv", "Distance curves under noise (sparse recovery)", semiconv_x);
  sparse_cmd("stoptime", "Oracle stopping time against the noise level", stoptime_x);
  sparse_cmd("bounds", "Check measured gap and feasibility against the theoretical bounds", bounds_x);

  // matcomp
  Common matcomp_c;
  MatcompFlags matcomp_mc;
  auto* matcomp = app.add_subcommand("matcomp", "Distance curves under noise (matrix completion)");
  matcomp_c.attach(matcomp);
  matcomp_mc.attach(matcomp, true);
  matcomp->callback([&] {
    action = [&] {
      json j = matcomp_c.options();
      j["matcomp"] = matcomp_mc.options();
      return run_experiment("matcomp", j);
    };
  });

  // pathcmp
  Common path_c;
  SparseFlags path_sp;
  std::optional<double> path_noise, path_span, path_tol;
  std::optional<std::size_t> path_folds;
  std::optional<int> path_grid;
  std::optional<long> path_lasso_iter;
  auto* pathcmp = app.add_subcommand("pathcmp", "Held-out MSE: early-stopped path against the Lasso path");
  path_c.attach(pathcmp);
  path_sp.attach(pathcmp);
  pathcmp->add_option("--noise", path_noise, "Noise norm over all rows");
  pathcmp->add_option("--folds", path_folds, "Cross-validation folds");
  pathcmp->add_option("--grid-count", path_grid, "Lambda grid size");
  pathcmp->add_option("--span", path_span, "Decades spanned by the grid");
  pathcmp->add_option("--lasso-tol", path_tol, "Proximal-gradient tolerance");
  pathcmp->add_option("--lasso-max-iter", path_lasso_iter, "Proximal-gradient iteration cap");
  pathcmp->callback([&] {
    action = [&] {
      json j = path_c.options();
      json p = path_sp.options();
      put(p, "noise", path_noise);
      put(p, "folds", path_folds);
      put(p, "grid_count", path_grid);
      put(p, "span_decades", path_span);
      put(p, "lasso_tol", path_tol);
      put(p, "lasso_max_iter", path_lasso_iter);
      j["path"] = p;
      return run_experiment("pathcmp", j);
    };
  });

  // tv-demo
  Common tv_c;
  std::optional<std::size_t> tv_side;
  std::optional<double> tv_ratio;
  auto* tv = app.add_subcommand("tv-demo", "Total-variation recovery through the stacked reformulation");
  tv_c.attach(tv);
  tv->add_option("--side", tv_side, "Image side length");
  tv->add_option("--ratio", tv_ratio, "Measurements per pixel");
  tv->callback([&] {
    action = [&] {
      json j = tv_c.options();
      json t = json::object();
      put(t, "side", tv_side);
      put(t, "ratio", tv_ratio);
      j["tv"] = t;
      return run_experiment("tv-demo", j);
    };
  });

  CLI11_PARSE(app, argc, argv);
  return action ? action() : 1;
}
