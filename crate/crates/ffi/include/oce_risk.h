#ifndef OCE_RISK_H
#define OCE_RISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define OCE_MODE_COMBINED 0

#define OCE_MODE_MONOTONE 1

#define OCE_MODE_INVARIANT 2

#define OCE_DESC_LP_DEVIATION 0

#define OCE_DESC_LP_SEMI_DEVIATION 1

#define OCE_DESC_MEAN_LP 2

#define OCE_DESC_LP_SEMI_MOMENT 3

#define OCE_DESC_EXPONENTIAL 4

#define OCE_DESC_LOGARITHMIC 5

#define OCE_DESC_INF_DEVIATION 6

// Outcome of a call.
typedef enum OceStatus {
  OCE_STATUS_OK = 0,
  OCE_STATUS_NULL_POINTER = 1,
  OCE_STATUS_INVALID_ARGUMENT = 2,
  OCE_STATUS_EMPTY_DOMAIN = 3,
  OCE_STATUS_INFEASIBLE = 4,
  OCE_STATUS_NON_CONVERGENCE = 5,
  OCE_STATUS_NOT_FINITE = 6,
  OCE_STATUS_PANIC = 7,
} OceStatus;

// Probability space handle.
typedef struct OceSpace OceSpace;

// Utility function handle.
typedef struct OceUtility OceUtility;

// Optimized certainty equivalent at one payoff.
typedef struct OceValue {
  double value;
  double lambda_bar;
  bool attained;
  // Set of minimizers of the scalar objective.
  double argmin_lo;
  double argmin_hi;
} OceValue;

// Risk function of a hull. `kind` is one of the `OCE_DESC_*` constants;
// `p` and `c` are ignored where the function has no such parameter
// (`c` for the inf-deviation, both for the exponential and log risks).
typedef struct OceDescriptor {
  uint32_t kind;
  double p;
  double c;
} OceDescriptor;

// Dual solver settings; a null pointer selects the defaults
// (16 restarts, seed 0).
typedef struct OceHullOptions {
  size_t restarts;
  uint64_t seed;
} OceHullOptions;

// Primal and dual evaluation of a hull.
typedef struct OceHull {
  double primal;
  double dual;
  double gap;
  double primal_lower_bound;
  bool slater;
  bool dual_feasible;
  bool converged;
  double residual;
} OceHull;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `cap` bytes) and returns the untruncated length
// in bytes, excluding the terminator. `buf` may be null when `cap` is 0.
//
// # Safety
// `buf` must be valid for `cap` bytes of writes.
size_t oce_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *oce_version(void);

// Creates a probability space from strictly positive weights summing to 1.
//
// # Safety
// `weights` must point to `n` readable doubles; `out` must be writable.
enum OceStatus oce_space_new(const double *weights, size_t n, struct OceSpace **out);

// Frees a space; null is ignored.
//
// # Safety
// `space` must come from `oce_space_new` and not be used afterwards.
void oce_space_free(struct OceSpace *space);

// Number of atoms, or 0 for a null handle.
//
// # Safety
// `space` must be null or a live handle.
size_t oce_space_len(const struct OceSpace *space);

// `gamma2 t` for `t <= 0` and `gamma1 t` for `t > 0`, with
// `gamma2 < -1 < gamma1 <= 0`.
//
// # Safety
// `out` must be writable.
enum OceStatus oce_utility_two_slope(double gamma1, double gamma2, struct OceUtility **out);

// The utility behind CVaR at level `beta` in (0, 1).
//
// # Safety
// `out` must be writable.
enum OceStatus oce_utility_cvar(double beta, struct OceUtility **out);

// `exp(-t) - 1`, the entropic utility.
//
// # Safety
// `out` must be writable.
enum OceStatus oce_utility_exponential(struct OceUtility **out);

// Indicator of `[0, +inf)`, the worst-case utility.
//
// # Safety
// `out` must be writable.
enum OceStatus oce_utility_worst_case(struct OceUtility **out);

// Piecewise linear utility with `n_breaks` increasing breakpoints and
// `n_breaks + 1` slopes; the leftmost slope may be `-inf`.
//
// # Safety
// `breaks` and `slopes` must point to `n_breaks` and `n_slopes` doubles;
// `out` must be writable.
enum OceStatus oce_utility_piecewise_linear(const double *breaks,
                                            size_t n_breaks,
                                            const double *slopes,
                                            size_t n_slopes,
                                            struct OceUtility **out);

// Frees a utility; null is ignored.
//
// # Safety
// `utility` must come from an `oce_utility_*` constructor and not be used
// afterwards.
void oce_utility_free(struct OceUtility *utility);

// `rho_v(X) = inf_l { l + E v(X + l) }` for the payoff `x` of length `n`.
//
// # Safety
// Handles must be live, `x` must point to `n` doubles and `out` must be
// writable.
enum OceStatus oce_value(const struct OceSpace *space,
                         const struct OceUtility *utility,
                         const double *x,
                         size_t n,
                         struct OceValue *out);

// Conjugate `rho_v*(X*)`; `+inf` outside the domain.
//
// # Safety
// Handles must be live, `xstar` must point to `n` doubles and `out` must be
// writable.
enum OceStatus oce_conjugate(const struct OceSpace *space,
                             const struct OceUtility *utility,
                             const double *xstar,
                             size_t n,
                             double *out);

// Subdifferential of `rho_v` at `x`: per-atom bounds written to `lower`
// and `upper` (length `n`), cut by `E(X*) = -1`. `nonempty` receives
// whether the cut box has a point.
//
// # Safety
// Handles must be live; `x`, `lower` and `upper` must be valid for `n`
// doubles; `nonempty` must be writable.
enum OceStatus oce_subdiff(const struct OceSpace *space,
                           const struct OceUtility *utility,
                           const double *x,
                           size_t n,
                           double *lower,
                           double *upper,
                           bool *nonempty);

// Evaluates the hull of `desc` at `x` in `mode` (an `OCE_MODE_*`
// constant), primally and through its dual. A null `numeraire` means the
// constant 1. When `xstar` is not null the dual point is written to it
// (length `n`).
//
// # Safety
// `space`, `desc` and `out` must be valid; `x` and a non-null `numeraire`
// or `xstar` must be valid for `n` doubles; `options` may be null.
enum OceStatus oce_hull(const struct OceSpace *space,
                        const struct OceDescriptor *desc,
                        uint32_t mode_code,
                        const double *numeraire,
                        const double *x,
                        size_t n,
                        const struct OceHullOptions *options,
                        struct OceHull *out,
                        double *xstar);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCE_RISK_H */
