/* C interface to the iterreg library.
 *
 * All objects are opaque handles created by iterreg_*_create style calls and
 * released with the matching *_free. Every fallible call returns an
 * iterreg_status; on failure iterreg_last_error() describes the problem for
 * the calling thread until its next failing call. Vectors are passed as
 * (pointer, length) pairs and lengths are checked against operator shapes.
 */
#ifndef ITERREG_ITERREG_H
#define ITERREG_ITERREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(ITERREG_BUILDING_LIBRARY)
#define ITERREG_API __attribute__((visibility("default")))
#else
#define ITERREG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum iterreg_status {
  ITERREG_OK = 0,
  ITERREG_ERR_CONTRACT = 1,
  ITERREG_ERR_NUMERICAL = 2,
  ITERREG_ERR_CERTIFICATION = 3,
  ITERREG_ERR_CERTIFICATE_INVALID = 4,
  ITERREG_ERR_ASSUMPTION = 5,
  ITERREG_ERR_RULE_INAPPLICABLE = 6,
  ITERREG_ERR_BOUND_VIOLATION = 7,
  ITERREG_ERR_IO = 8,
  ITERREG_ERR_INTERNAL = 99
} iterreg_status;

typedef struct iterreg_operator iterreg_operator;
typedef struct iterreg_bias iterreg_bias;
typedef struct iterreg_problem iterreg_problem;
typedef struct iterreg_certificate iterreg_certificate;
typedef struct iterreg_log iterreg_log;

/* tau = sigma = 0 selects the symmetric steps sqrt(epsilon) / (1.01 ||X||). */
typedef struct iterreg_solver_options {
  double epsilon;
  double tau;
  double sigma;
  long max_iter;
  long record_every;
} iterreg_solver_options;

/* feas_tol < 0 selects 1e-9 * max(1, ||y||). */
typedef struct iterreg_certify_options {
  double feas_tol;
  double subgrad_tol;
  long max_iter;
  long check_every;
  int polish;
} iterreg_certify_options;

ITERREG_API const char* iterreg_version(void);
ITERREG_API const char* iterreg_last_error(void);
ITERREG_API const char* iterreg_status_name(iterreg_status status);

ITERREG_API void iterreg_solver_options_default(iterreg_solver_options* opts);
ITERREG_API void iterreg_certify_options_default(iterreg_certify_options* opts);

/* Operators */
ITERREG_API iterreg_status iterreg_operator_dense(const double* row_major, size_t rows, size_t cols,
                                                  iterreg_operator** out);
/* Observed entries (rows[i], cols[i]) of a p1 x p2 matrix, zero based. */
ITERREG_API iterreg_status iterreg_operator_mask(size_t p1, size_t p2, const size_t* rows, const size_t* cols,
                                                 size_t count, iterreg_operator** out);
ITERREG_API iterreg_status iterreg_operator_grad2d(size_t p1, size_t p2, iterreg_operator** out);
ITERREG_API void iterreg_operator_free(iterreg_operator* op);
ITERREG_API iterreg_status iterreg_operator_dims(const iterreg_operator* op, size_t* out_dim, size_t* in_dim);
ITERREG_API iterreg_status iterreg_operator_apply(const iterreg_operator* op, const double* w, size_t w_len,
                                                  double* out, size_t out_len);
ITERREG_API iterreg_status iterreg_operator_adjoint(const iterreg_operator* op, const double* theta,
                                                    size_t theta_len, double* out, size_t out_len);
ITERREG_API iterreg_status iterreg_operator_norm(const iterreg_operator* op, double tol, long max_iter,
                                                 uint64_t seed, double* out);

/* Biases */
ITERREG_API iterreg_status iterreg_bias_zero(iterreg_bias** out);
ITERREG_API iterreg_status iterreg_bias_l1(iterreg_bias** out);
ITERREG_API iterreg_status iterreg_bias_sq_l2(double alpha, iterreg_bias** out);
ITERREG_API iterreg_status iterreg_bias_nuclear(size_t p1, size_t p2, iterreg_bias** out);
ITERREG_API void iterreg_bias_free(iterreg_bias* bias);
ITERREG_API iterreg_status iterreg_bias_eval(const iterreg_bias* bias, const double* w, size_t len, double* out);
ITERREG_API iterreg_status iterreg_bias_prox(const iterreg_bias* bias, double tau, const double* v, size_t len,
                                             double* out);

/* Problems */
ITERREG_API iterreg_status iterreg_problem_gen_sparse(size_t n, size_t p, size_t s, double corr, double y_norm,
                                                      uint64_t seed, iterreg_problem** out);
ITERREG_API iterreg_status iterreg_problem_gen_matcomp(size_t d, size_t r, size_t denom, double y_norm,
                                                       uint64_t seed, iterreg_problem** out);
ITERREG_API iterreg_status iterreg_problem_add_noise(const iterreg_problem* prob, double delta, uint64_t seed,
                                                     iterreg_problem** out);
ITERREG_API iterreg_status iterreg_problem_load(const char* dir, iterreg_problem** out);
ITERREG_API iterreg_status iterreg_problem_save(const iterreg_problem* prob, const char* dir);
ITERREG_API void iterreg_problem_free(iterreg_problem* prob);
ITERREG_API iterreg_status iterreg_problem_dims(const iterreg_problem* prob, size_t* n, size_t* p);
ITERREG_API iterreg_status iterreg_problem_delta(const iterreg_problem* prob, double* out);
/* New handle sharing the problem's operator. */
ITERREG_API iterreg_status iterreg_problem_operator(const iterreg_problem* prob, iterreg_operator** out);
/* which = 0: clean y, which = 1: observed y_delta. */
ITERREG_API iterreg_status iterreg_problem_data(const iterreg_problem* prob, int which, double* out, size_t len);

/* Solver */
ITERREG_API iterreg_status iterreg_certify(const iterreg_operator* op, const iterreg_bias* bias, const double* y,
                                           size_t n, const iterreg_solver_options* solver,
                                           const iterreg_certify_options* certify, iterreg_certificate** out);
ITERREG_API void iterreg_certificate_free(iterreg_certificate* cert);
ITERREG_API iterreg_status iterreg_certificate_info(const iterreg_certificate* cert, double* feas_res,
                                                    double* subgrad_res, long* iterations, double* j_star);
ITERREG_API iterreg_status iterreg_certificate_w(const iterreg_certificate* cert, double* out, size_t len);
ITERREG_API iterreg_status iterreg_certificate_theta(const iterreg_certificate* cert, double* out, size_t len);
/* w_star.csv, theta_star.csv and certificate.json under dir. */
ITERREG_API iterreg_status iterreg_certificate_save(const iterreg_certificate* cert, const char* dir);

/* y_clean and reference may be NULL. */
ITERREG_API iterreg_status iterreg_run(const iterreg_operator* op, const iterreg_bias* bias, const double* y_obs,
                                       const double* y_clean, size_t n, const iterreg_solver_options* solver,
                                       const iterreg_certificate* reference, iterreg_log** out);
ITERREG_API void iterreg_log_free(iterreg_log* log);
ITERREG_API iterreg_status iterreg_log_rows(const iterreg_log* log, size_t* rows);
ITERREG_API iterreg_status iterreg_log_final_w(const iterreg_log* log, double* out, size_t len);
ITERREG_API iterreg_status iterreg_log_write_csv(const iterreg_log* log, const char* path);

/* Stopping rules */
ITERREG_API iterreg_status iterreg_budget_stop(double c, double delta, long* k);
/* *found = 0 when the residual never drops below tau_d * delta. */
ITERREG_API iterreg_status iterreg_discrepancy_stop(const iterreg_log* log, double tau_d, double delta, long* k,
                                                    int* found);
ITERREG_API iterreg_status iterreg_oracle_stop(const iterreg_log* log, long* k, double* distance);

/* Experiments: name is one of semiconv, stoptime, bounds, pathcmp, matcomp,
 * tv-demo, solve. options_json may be NULL or "{}". On success *summary_json
 * receives a heap string to be released with iterreg_string_free. */
ITERREG_API iterreg_status iterreg_experiment_run(const char* name, const char* options_json,
                                                  char** summary_json);
ITERREG_API void iterreg_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
