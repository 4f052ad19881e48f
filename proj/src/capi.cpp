#include "iterreg/iterreg.h"

#include <climits>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iterreg/bias.hpp"
#include "iterreg/csv.hpp"
#include "iterreg/error.hpp"
#include "iterreg/experiments.hpp"
#include "iterreg/linop.hpp"
#include "iterreg/pdsolver.hpp"
#include "iterreg/problems.hpp"
#include "iterreg/stopping.hpp"

struct iterreg_operator {
  iterreg::LinearOperator op;
};
struct iterreg_bias {
  iterreg::Bias bias;
};
struct iterreg_problem {
  iterreg::NoisyProblem prob;
};
struct iterreg_certificate {
  iterreg::SaddleCertificate cert;
};
struct iterreg_log {
  iterreg::IterateLog log;
};

namespace {

thread_local std::string g_last_error;

iterreg_status status_for(iterreg::ErrorKind kind) {
  using iterreg::ErrorKind;
  switch (kind) {
    case ErrorKind::ContractViolation: return ITERREG_ERR_CONTRACT;
    case ErrorKind::NumericalFailure: return ITERREG_ERR_NUMERICAL;
    case ErrorKind::CertificationFailure: return ITERREG_ERR_CERTIFICATION;
    case ErrorKind::CertificateInvalid: return ITERREG_ERR_CERTIFICATE_INVALID;
    case ErrorKind::AssumptionViolated: return ITERREG_ERR_ASSUMPTION;
    case ErrorKind::RuleInapplicable: return ITERREG_ERR_RULE_INAPPLICABLE;
    case ErrorKind::BoundViolation: return ITERREG_ERR_BOUND_VIOLATION;
    case ErrorKind::Io: return ITERREG_ERR_IO;
  }
  return ITERREG_ERR_INTERNAL;
}

iterreg_status fail(iterreg_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <class F>
iterreg_status guarded(F&& body) {
  try {
    body();
    return ITERREG_OK;
  } catch (const iterreg::Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ITERREG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ITERREG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ITERREG_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw iterreg::ContractViolation(std::string(what) + " must not be NULL");
}

void need_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw iterreg::ContractViolation(std::string(what) + ": length " + std::to_string(got) + ", expected " +
                                     std::to_string(want));
}

iterreg::Vector to_vector(const double* data, std::size_t len) {
  need(data, "input vector");
  return Eigen::Map<const iterreg::Vector>(data, static_cast<Eigen::Index>(len));
}

void copy_out(const iterreg::Vector& v, double* out, std::size_t len, const char* what) {
  need(out, "output buffer");
  need_len(len, static_cast<std::size_t>(v.size()), what);
  std::memcpy(out, v.data(), len * sizeof(double));
}

iterreg::SolverConfig make_config(const iterreg::LinearOperator& X, const iterreg_solver_options* o) {
  iterreg_solver_options d;
  iterreg_solver_options_default(&d);
  const auto& opts = o ? *o : d;
  auto cfg = (opts.tau == 0.0 && opts.sigma == 0.0)
                 ? iterreg::SolverConfig::symmetric(X, opts.epsilon)
                 : iterreg::SolverConfig::with_steps(X, opts.epsilon, opts.tau, opts.sigma);
  cfg.max_iter = opts.max_iter;
  cfg.record_every = opts.record_every;
  cfg.validate();
  return cfg;
}

template <class Handle, class Value>
void emit(Handle** out, Value&& value) {
  need(out, "output handle");
  *out = nullptr;
  *out = new Handle{std::forward<Value>(value)};
}

}  // namespace

extern "C" {

const char* iterreg_version(void) { return "1.0.0"; }

const char* iterreg_last_error(void) { return g_last_error.c_str(); }

const char* iterreg_status_name(iterreg_status status) {
  switch (status) {
    case ITERREG_OK: return "ok";
    case ITERREG_ERR_CONTRACT: return "contract-violation";
    case ITERREG_ERR_NUMERICAL: return "numerical-failure";
    case ITERREG_ERR_CERTIFICATION: return "certification-failure";
    case ITERREG_ERR_CERTIFICATE_INVALID: return "certificate-invalid";
    case ITERREG_ERR_ASSUMPTION: return "assumption-violated";
    case ITERREG_ERR_RULE_INAPPLICABLE: return "rule-inapplicable";
    case ITERREG_ERR_BOUND_VIOLATION: return "bound-violation";
    case ITERREG_ERR_IO: return "io-error";
    case ITERREG_ERR_INTERNAL: return "internal-error";
  }
  return "unknown-status";
}

void iterreg_solver_options_default(iterreg_solver_options* opts) {
  if (!opts) return;
  *opts = {0.99, 0.0, 0.0, 1000, 1};
}

void iterreg_certify_options_default(iterreg_certify_options* opts) {
  if (!opts) return;
  const iterreg::CertifyOptions d;
  *opts = {d.feas_tol, d.subgrad_tol, d.max_iter, d.check_every, d.polish ? 1 : 0};
}

iterreg_status iterreg_operator_dense(const double* row_major, size_t rows, size_t cols, iterreg_operator** out) {
  return guarded([&] {
    need(row_major, "matrix data");
    iterreg::RowMatrix m = Eigen::Map<const iterreg::RowMatrix>(row_major, static_cast<Eigen::Index>(rows),
                                                                 static_cast<Eigen::Index>(cols));
    emit(out, iterreg::LinearOperator::dense(std::move(m)));
  });
}

iterreg_status iterreg_operator_mask(size_t p1, size_t p2, const size_t* rows, const size_t* cols, size_t count,
                                     iterreg_operator** out) {
  return guarded([&] {
    if (count > 0) {
      need(rows, "rows");
      need(cols, "cols");
    }
    std::vector<iterreg::GridIndex> observed(count);
    for (size_t i = 0; i < count; ++i) observed[i] = {rows[i], cols[i]};
    emit(out, iterreg::LinearOperator::mask(p1, p2, std::move(observed)));
  });
}

iterreg_status iterreg_operator_grad2d(size_t p1, size_t p2, iterreg_operator** out) {
  return guarded([&] { emit(out, iterreg::LinearOperator::grad2d(p1, p2)); });
}

void iterreg_operator_free(iterreg_operator* op) { delete op; }

iterreg_status iterreg_operator_dims(const iterreg_operator* op, size_t* out_dim, size_t* in_dim) {
  return guarded([&] {
    need(op, "operator");
    if (out_dim) *out_dim = op->op.out_dim();
    if (in_dim) *in_dim = op->op.in_dim();
  });
}

iterreg_status iterreg_operator_apply(const iterreg_operator* op, const double* w, size_t w_len, double* out,
                                      size_t out_len) {
  return guarded([&] {
    need(op, "operator");
    need_len(w_len, op->op.in_dim(), "w");
    copy_out(op->op.apply(to_vector(w, w_len)), out, out_len, "output");
  });
}

iterreg_status iterreg_operator_adjoint(const iterreg_operator* op, const double* theta, size_t theta_len,
                                        double* out, size_t out_len) {
  return guarded([&] {
    need(op, "operator");
    need_len(theta_len, op->op.out_dim(), "theta");
    copy_out(op->op.adjoint(to_vector(theta, theta_len)), out, out_len, "output");
  });
}

iterreg_status iterreg_operator_norm(const iterreg_operator* op, double tol, long max_iter, uint64_t seed,
                                     double* out) {
  return guarded([&] {
    need(op, "operator");
    need(out, "output");
    iterreg::require(max_iter > 0 && max_iter <= INT_MAX, "max_iter out of range");
    *out = iterreg::op_norm(op->op, tol, static_cast<int>(max_iter), seed);
  });
}

iterreg_status iterreg_bias_zero(iterreg_bias** out) {
  return guarded([&] { emit(out, iterreg::Bias::zero()); });
}

iterreg_status iterreg_bias_l1(iterreg_bias** out) {
  return guarded([&] { emit(out, iterreg::Bias::l1()); });
}

iterreg_status iterreg_bias_sq_l2(double alpha, iterreg_bias** out) {
  return guarded([&] { emit(out, iterreg::Bias::sq_l2(alpha)); });
}

iterreg_status iterreg_bias_nuclear(size_t p1, size_t p2, iterreg_bias** out) {
  return guarded([&] { emit(out, iterreg::Bias::nuclear(p1, p2)); });
}

void iterreg_bias_free(iterreg_bias* bias) { delete bias; }

iterreg_status iterreg_bias_eval(const iterreg_bias* bias, const double* w, size_t len, double* out) {
  return guarded([&] {
    need(bias, "bias");
    need(out, "output");
    *out = bias->bias.eval(to_vector(w, len));
  });
}

iterreg_status iterreg_bias_prox(const iterreg_bias* bias, double tau, const double* v, size_t len, double* out) {
  return guarded([&] {
    need(bias, "bias");
    copy_out(bias->bias.prox(tau, to_vector(v, len)), out, len, "output");
  });
}

iterreg_status iterreg_problem_gen_sparse(size_t n, size_t p, size_t s, double corr, double y_norm, uint64_t seed,
                                          iterreg_problem** out) {
  return guarded([&] { emit(out, iterreg::gen_sparse(n, p, s, corr, y_norm, seed)); });
}

iterreg_status iterreg_problem_gen_matcomp(size_t d, size_t r, size_t denom, double y_norm, uint64_t seed,
                                           iterreg_problem** out) {
  return guarded([&] { emit(out, iterreg::gen_matcomp(d, r, denom, y_norm, seed)); });
}

iterreg_status iterreg_problem_add_noise(const iterreg_problem* prob, double delta, uint64_t seed,
                                         iterreg_problem** out) {
  return guarded([&] {
    need(prob, "problem");
    emit(out, iterreg::add_noise(prob->prob, delta, seed));
  });
}

iterreg_status iterreg_problem_load(const char* dir, iterreg_problem** out) {
  return guarded([&] {
    need(dir, "dir");
    emit(out, iterreg::load_problem(dir));
  });
}

iterreg_status iterreg_problem_save(const iterreg_problem* prob, const char* dir) {
  return guarded([&] {
    need(prob, "problem");
    need(dir, "dir");
    iterreg::save_problem(prob->prob, dir);
  });
}

void iterreg_problem_free(iterreg_problem* prob) { delete prob; }

iterreg_status iterreg_problem_dims(const iterreg_problem* prob, size_t* n, size_t* p) {
  return guarded([&] {
    need(prob, "problem");
    if (n) *n = prob->prob.X.out_dim();
    if (p) *p = prob->prob.X.in_dim();
  });
}

iterreg_status iterreg_problem_delta(const iterreg_problem* prob, double* out) {
  return guarded([&] {
    need(prob, "problem");
    need(out, "output");
    *out = prob->prob.delta;
  });
}

iterreg_status iterreg_problem_operator(const iterreg_problem* prob, iterreg_operator** out) {
  return guarded([&] {
    need(prob, "problem");
    emit(out, prob->prob.X);
  });
}

iterreg_status iterreg_problem_data(const iterreg_problem* prob, int which, double* out, size_t len) {
  return guarded([&] {
    need(prob, "problem");
    iterreg::require(which == 0 || which == 1, "which must be 0 (clean) or 1 (observed)");
    copy_out(which == 0 ? prob->prob.y : prob->prob.y_delta, out, len, "output");
  });
}

iterreg_status iterreg_certify(const iterreg_operator* op, const iterreg_bias* bias, const double* y, size_t n,
                               const iterreg_solver_options* solver, const iterreg_certify_options* certify,
                               iterreg_certificate** out) {
  return guarded([&] {
    need(op, "operator");
    need(bias, "bias");
    need_len(n, op->op.out_dim(), "y");
    iterreg::CertifyOptions co;
    if (certify) {
      co.feas_tol = certify->feas_tol;
      co.subgrad_tol = certify->subgrad_tol;
      co.max_iter = certify->max_iter;
      co.check_every = certify->check_every;
      co.polish = certify->polish != 0;
    }
    emit(out, iterreg::certify(op->op, bias->bias, to_vector(y, n), make_config(op->op, solver), co));
  });
}

void iterreg_certificate_free(iterreg_certificate* cert) { delete cert; }

iterreg_status iterreg_certificate_info(const iterreg_certificate* cert, double* feas_res, double* subgrad_res,
                                        long* iterations, double* j_star) {
  return guarded([&] {
    need(cert, "certificate");
    if (feas_res) *feas_res = cert->cert.feas_res;
    if (subgrad_res) *subgrad_res = cert->cert.subgrad_res;
    if (iterations) *iterations = cert->cert.iterations;
    if (j_star) *j_star = cert->cert.j_star;
  });
}

iterreg_status iterreg_certificate_w(const iterreg_certificate* cert, double* out, size_t len) {
  return guarded([&] {
    need(cert, "certificate");
    copy_out(cert->cert.w_star, out, len, "output");
  });
}

iterreg_status iterreg_certificate_theta(const iterreg_certificate* cert, double* out, size_t len) {
  return guarded([&] {
    need(cert, "certificate");
    copy_out(cert->cert.theta_star, out, len, "output");
  });
}

iterreg_status iterreg_certificate_save(const iterreg_certificate* cert, const char* dir) {
  return guarded([&] {
    need(cert, "certificate");
    need(dir, "dir");
    const std::filesystem::path root(dir);
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw iterreg::IoError("cannot create " + root.string() + ": " + ec.message());
    iterreg::write_vector_csv(root / "w_star.csv", cert->cert.w_star);
    iterreg::write_vector_csv(root / "theta_star.csv", cert->cert.theta_star);
    const nlohmann::json meta{{"feas_res", cert->cert.feas_res},
                              {"subgrad_res", cert->cert.subgrad_res},
                              {"iterations", cert->cert.iterations},
                              {"j_star", cert->cert.j_star}};
    std::ofstream f(root / "certificate.json");
    f << meta.dump(2) << '\n';
    if (!f) throw iterreg::IoError("cannot write " + (root / "certificate.json").string());
  });
}

iterreg_status iterreg_run(const iterreg_operator* op, const iterreg_bias* bias, const double* y_obs,
                           const double* y_clean, size_t n, const iterreg_solver_options* solver,
                           const iterreg_certificate* reference, iterreg_log** out) {
  return guarded([&] {
    need(op, "operator");
    need(bias, "bias");
    need_len(n, op->op.out_dim(), "y_obs");
    const iterreg::Vector obs = to_vector(y_obs, n);
    iterreg::Vector clean;
    iterreg::RunOptions ro;
    if (y_clean) {
      clean = to_vector(y_clean, n);
      ro.y_clean = &clean;
    }
    if (reference) ro.reference = &reference->cert;
    emit(out, iterreg::run(op->op, bias->bias, obs, make_config(op->op, solver), ro));
  });
}

void iterreg_log_free(iterreg_log* log) { delete log; }

iterreg_status iterreg_log_rows(const iterreg_log* log, size_t* rows) {
  return guarded([&] {
    need(log, "log");
    need(rows, "output");
    *rows = log->log.rows.size();
  });
}

iterreg_status iterreg_log_final_w(const iterreg_log* log, double* out, size_t len) {
  return guarded([&] {
    need(log, "log");
    copy_out(log->log.final_state.w, out, len, "output");
  });
}

iterreg_status iterreg_log_write_csv(const iterreg_log* log, const char* path) {
  return guarded([&] {
    need(log, "log");
    need(path, "path");
    iterreg::write_log_csv(std::filesystem::path(path), log->log);
  });
}

iterreg_status iterreg_budget_stop(double c, double delta, long* k) {
  return guarded([&] {
    need(k, "output");
    *k = iterreg::budget_stop(c, delta);
  });
}

iterreg_status iterreg_discrepancy_stop(const iterreg_log* log, double tau_d, double delta, long* k, int* found) {
  return guarded([&] {
    need(log, "log");
    need(k, "output");
    need(found, "found");
    const auto stop = iterreg::discrepancy_stop(log->log, tau_d, delta);
    *found = stop ? 1 : 0;
    *k = stop.value_or(0);
  });
}

iterreg_status iterreg_oracle_stop(const iterreg_log* log, long* k, double* distance) {
  return guarded([&] {
    need(log, "log");
    const auto stop = iterreg::oracle_stop(log->log);
    if (k) *k = stop.k;
    if (distance) *distance = stop.distance;
  });
}

iterreg_status iterreg_experiment_run(const char* name, const char* options_json, char** summary_json) {
  return guarded([&] {
    need(name, "name");
    need(summary_json, "summary_json");
    *summary_json = nullptr;
    const auto spec = iterreg::spec_from_json(name, options_json ? options_json : "");
    const std::string summary = iterreg::run_experiment(spec);
    char* buf = new char[summary.size() + 1];
    std::memcpy(buf, summary.c_str(), summary.size() + 1);
    *summary_json = buf;
  });
}

void iterreg_string_free(char* s) { delete[] s; }

}  // extern "C"
