#ifndef BLOCKREG_H
#define BLOCKREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BlockregStatus {
  BLOCKREG_STATUS_OK = 0,
  BLOCKREG_STATUS_NULL_POINTER = 1,
  BLOCKREG_STATUS_DIMENSION = 2,
  BLOCKREG_STATUS_PARAMETER = 3,
  BLOCKREG_STATUS_DIVERGENCE = 4,
  BLOCKREG_STATUS_NOT_INVERTIBLE = 5,
  BLOCKREG_STATUS_ZERO_SIGNAL = 6,
  BLOCKREG_STATUS_FORMAT = 7,
  BLOCKREG_STATUS_IO = 8,
  BLOCKREG_STATUS_BUFFER_TOO_SMALL = 9,
  BLOCKREG_STATUS_PANIC = 10,
} BlockregStatus;

typedef enum BlockregLoss {
  BLOCKREG_LOSS_QUADRATIC = 0,
  BLOCKREG_LOSS_ABSOLUTE = 1,
} BlockregLoss;

// A denoising problem: data, operators, loss and hyperparameters.
typedef struct BlockregProblem BlockregProblem;

// Result of [`blockreg_solve`].
typedef struct BlockregReport BlockregReport;

// Step sizes and stopping budget; mirrors the Rust `SolverParams`.
typedef struct BlockregSolverParams {
  double tau1;
  double tau2;
  double mu1;
  double mu2;
  double mu3;
  uintptr_t max_iter;
  double tol;
  uint64_t seed;
} BlockregSolverParams;

// Copies the last error message of this thread into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length, or 0
// when there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t blockreg_last_error(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *blockreg_version(void);

// 1D denoising problem on `y[0..n]`. `alpha` may be `INFINITY`.
//
// # Safety
// `y` must point to `n` readable values; `out` must be writable.
enum BlockregStatus blockreg_problem_denoise_1d(const double *y,
                                                uintptr_t n,
                                                enum BlockregLoss loss,
                                                double lambda,
                                                double alpha,
                                                struct BlockregProblem **out);

// 2D denoising problem on a row-major `height x width` image.
//
// # Safety
// `pixels` must point to `height * width` readable values; `out` must be
// writable.
enum BlockregStatus blockreg_problem_denoise_2d(const double *pixels,
                                                uintptr_t height,
                                                uintptr_t width,
                                                enum BlockregLoss loss,
                                                double lambda,
                                                double alpha,
                                                struct BlockregProblem **out);

// # Safety
// `problem` must be null or come from a `blockreg_problem_*` constructor
// and not have been freed.
void blockreg_problem_free(struct BlockregProblem *problem);

// Length of the unknown `x`.
//
// # Safety
// `problem` must be null or a live problem handle.
uintptr_t blockreg_problem_len(const struct BlockregProblem *problem);

// Default step sizes for `problem`.
//
// # Safety
// `problem` must be a live problem handle; `out` must be writable.
enum BlockregStatus blockreg_params_for_problem(const struct BlockregProblem *problem,
                                                struct BlockregSolverParams *out);

// Solves `problem`. `params` may be null for the defaults.
//
// # Safety
// `problem` must be a live problem handle, `params` null or readable, and
// `out` writable.
enum BlockregStatus blockreg_solve(const struct BlockregProblem *problem,
                                   const struct BlockregSolverParams *params,
                                   struct BlockregReport **out);

// # Safety
// `report` must be null or come from [`blockreg_solve`] and not have been
// freed.
void blockreg_report_free(struct BlockregReport *report);

// Copies `x̂` into `buf`, which must hold [`blockreg_problem_len`] values.
//
// # Safety
// `report` must be a live report; `buf` must point to `len` writable
// values.
enum BlockregStatus blockreg_report_x(const struct BlockregReport *report,
                                      double *buf,
                                      uintptr_t len);

// Length of `σ̂`.
//
// # Safety
// `report` must be null or a live report.
uintptr_t blockreg_report_sigma_len(const struct BlockregReport *report);

// Copies `σ̂` into `buf`.
//
// # Safety
// `report` must be a live report; `buf` must point to `len` writable
// values.
enum BlockregStatus blockreg_report_sigma(const struct BlockregReport *report,
                                          double *buf,
                                          uintptr_t len);

// Iterations run, whether the stopping rule was met, and the last value of
// the objective trace. Any out pointer may be null.
//
// # Safety
// `report` must be a live report; non-null out pointers must be writable.
enum BlockregStatus blockreg_report_summary(const struct BlockregReport *report,
                                            uintptr_t *iterations,
                                            bool *converged,
                                            double *objective);

// `f(Lx) + λ Ψ_α(Rx)` with the inner problem solved to `tol`.
//
// # Safety
// `problem` must be a live handle, `x` must point to `n` values and `out`
// must be writable.
enum BlockregStatus blockreg_objective(const struct BlockregProblem *problem,
                                       const double *x,
                                       uintptr_t n,
                                       double tol,
                                       double *out);

// Joint prox of `γ φ` at `(v_tilde, sigma_tilde)`.
//
// # Safety
// `v_out` and `sigma_out` must be writable.
enum BlockregStatus blockreg_prox_perspective(double v_tilde,
                                              double sigma_tilde,
                                              double gamma,
                                              double *v_out,
                                              double *sigma_out);

// Euclidean projection of `eta[0..n]` onto the ℓ1 ball of radius `alpha`.
// `out` may alias `eta`.
//
// # Safety
// `eta` must point to `n` readable and `out` to `n` writable values.
enum BlockregStatus blockreg_project_l1_ball(const double *eta,
                                             uintptr_t n,
                                             double alpha,
                                             double *out);

// `Ψ_α(z)` with the 1D difference acting on `σ`.
//
// # Safety
// `z` must point to `n` values and `out` must be writable.
enum BlockregStatus blockreg_penalty_1d(const double *z,
                                        uintptr_t n,
                                        double alpha,
                                        double tol,
                                        double *out);

// Exact 1D total-variation denoising, `out` may alias `y`.
//
// # Safety
// `y` must point to `n` readable and `out` to `n` writable values.
enum BlockregStatus blockreg_tv_1d(const double *y, uintptr_t n, double lambda, double *out);

// Cantor function sampled at `n` points.
//
// # Safety
// `out` must point to `n` writable values.
enum BlockregStatus blockreg_cantor(uintptr_t n, uint32_t depth, double *out);

// `x` plus seeded Gaussian noise at exactly `snr_db`.
//
// # Safety
// `x` must point to `n` readable and `out` to `n` writable values.
enum BlockregStatus blockreg_add_awgn(const double *x,
                                      uintptr_t n,
                                      double snr_db,
                                      uint64_t seed,
                                      double *out);

// SNR of `x_hat` against `x` in dB; `INFINITY` for an exact match.
//
// # Safety
// `x` and `x_hat` must point to `n` values and `out` must be writable.
enum BlockregStatus blockreg_snr(const double *x, const double *x_hat, uintptr_t n, double *out);

#endif  /* BLOCKREG_H */
