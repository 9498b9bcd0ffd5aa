#ifndef SELFSIM_H
#define SELFSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SelfsimShotKind {
  SELFSIM_SHOT_KIND_SIGN_CHANGE = 0,
  SELFSIM_SHOT_KIND_GROW_UP = 1,
  SELFSIM_SHOT_KIND_INTERFACE = 2,
  SELFSIM_SHOT_KIND_UNDETERMINED = 3,
} SelfsimShotKind;

typedef enum SelfsimStatus {
  SELFSIM_STATUS_OK = 0,
  // Parameters or options outside their admissible range.
  SELFSIM_STATUS_VALIDATION = 1,
  // The computation ran but did not produce a result (no bracket, failed
  // extraction, budget exhausted).
  SELFSIM_STATUS_NUMERICAL = 2,
  SELFSIM_STATUS_IO = 3,
  SELFSIM_STATUS_NULL_POINTER = 4,
  // Buffer passed to a copy function is too small.
  SELFSIM_STATUS_BUFFER_TOO_SMALL = 5,
  SELFSIM_STATUS_PANIC = 6,
} SelfsimStatus;

typedef struct SelfsimProblem SelfsimProblem;

typedef struct SelfsimShot SelfsimShot;

// Integration options; start from [`selfsim_options_default`].
typedef struct SelfsimOptions {
  double rel_tol;
  double abs_tol;
  // Shots stop once f drops below f_floor·f(0).
  double f_floor;
  // Relative bracket width at which bisection stops.
  double bisect_tol;
  // Scale applied to the series start radius.
  double xi_init_scale;
} SelfsimOptions;

// Derived constants of a parameter set.
typedef struct SelfsimExponents {
  double alpha;
  double beta;
  double l;
  double p_c;
  double k_series;
  bool uniqueness_guaranteed;
} SelfsimExponents;

// Scalar results of a shot; fields that do not apply to its kind are NaN.
typedef struct SelfsimShotSummary {
  enum SelfsimShotKind kind;
  double d;
  double f0;
  double xi0;
  double c;
  double xi_min;
  double f_min;
  double tail_exponent;
  size_t trace_len;
} SelfsimShotSummary;

typedef struct SelfsimInterface {
  double d_star;
  double d_lo;
  double d_hi;
  double xi0;
  double c;
  size_t iterations;
  bool uniqueness_guaranteed;
  // True when bisection stopped on a window where shots stop classifying
  // consistently, before reaching `bisect_tol`.
  bool ambiguous;
} SelfsimInterface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message on this thread, or null. Valid until the next call
// into the library from the same thread.
const char *selfsim_last_error(void);

struct SelfsimOptions selfsim_options_default(void);

// Validate (m, p, σ, N) and create a problem handle. `exploratory` admits
// the one-dimensional regimes with σ ≤ −1.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum SelfsimStatus selfsim_problem_new(double m,
                                       double p,
                                       double sigma,
                                       uint32_t n,
                                       bool exploratory,
                                       struct SelfsimProblem **out);

// # Safety
// `problem` must be null or a handle from [`selfsim_problem_new`] that has
// not been freed.
void selfsim_problem_free(struct SelfsimProblem *problem);

// # Safety
// `problem` must be a live handle and `out` valid for writing.
enum SelfsimStatus selfsim_problem_exponents(const struct SelfsimProblem *problem,
                                             struct SelfsimExponents *out);

// Integrate one shot with f(0) = D^(1/(m−p)). `options` may be null for
// the defaults.
//
// # Safety
// `problem` must be a live handle, `options` null or valid, `out` valid
// for writing one pointer.
enum SelfsimStatus selfsim_shoot(const struct SelfsimProblem *problem,
                                 double d,
                                 const struct SelfsimOptions *options,
                                 struct SelfsimShot **out);

// # Safety
// `shot` must be null or a handle from [`selfsim_shoot`] that has not been
// freed.
void selfsim_shot_free(struct SelfsimShot *shot);

// # Safety
// `shot` must be a live handle and `out` valid for writing.
enum SelfsimStatus selfsim_shot_summary(const struct SelfsimShot *shot,
                                        struct SelfsimShotSummary *out);

// Copy the trace (ξ, f, (f^m)′) into caller buffers of length `capacity`.
// Any of the three buffers may be null to skip that column.
//
// # Safety
// `shot` must be a live handle; each non-null buffer must be valid for
// `capacity` writes.
enum SelfsimStatus selfsim_shot_trace(const struct SelfsimShot *shot,
                                      double *xi,
                                      double *f,
                                      double *v,
                                      size_t capacity);

// Bracket and bisect for the interface profile. `options` may be null.
//
// # Safety
// `problem` must be a live handle, `options` null or valid, `out` valid
// for writing.
enum SelfsimStatus selfsim_find_interface(const struct SelfsimProblem *problem,
                                          const struct SelfsimOptions *options,
                                          struct SelfsimInterface *out);

// Critical-point catalog as JSON. Release the string with
// [`selfsim_string_free`].
//
// # Safety
// `problem` must be a live handle and `out` valid for writing one pointer.
enum SelfsimStatus selfsim_catalog_json(const struct SelfsimProblem *problem, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void selfsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELFSIM_H */
