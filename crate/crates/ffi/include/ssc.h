#ifndef SSC_H
#define SSC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SscStatus {
  SSC_STATUS_OK = 0,
  SSC_STATUS_NULL_POINTER = 1,
  SSC_STATUS_INVALID_ARGUMENT = 2,
  SSC_STATUS_INVALID_MATRIX = 3,
  SSC_STATUS_BUDGET_EXCEEDED = 4,
  SSC_STATUS_NUMERICAL = 5,
  SSC_STATUS_BUFFER_TOO_SMALL = 6,
  SSC_STATUS_PANIC = 7,
} SscStatus;

typedef enum SscMethod {
  SSC_METHOD_AUTO = 0,
  SSC_METHOD_BNB = 1,
  SSC_METHOD_ORACLE = 2,
} SscMethod;

typedef enum SscVerdict {
  SSC_VERDICT_HOLDS = 0,
  SSC_VERDICT_FAILS = 1,
  SSC_VERDICT_UNKNOWN = 2,
} SscVerdict;

typedef enum SscReason {
  SSC_REASON_NCSSC_FAILED = 0,
  SSC_REASON_NORM_EXCEEDS_ONE = 1,
  SSC_REASON_EXTRA_MAXIMIZER = 2,
  SSC_REASON_ALL_CHECKS_PASSED = 3,
  SSC_REASON_DEADLINE_REACHED = 4,
  SSC_REASON_SPARSITY_SCREEN_FAILED = 5,
} SscReason;

/**
 * Opaque nonnegative factor matrix.
 */
typedef struct SscMatrix SscMatrix;

/**
 * Opaque result of [`ssc_check`].
 */
typedef struct SscReport SscReport;

/**
 * Options for [`ssc_check`]; start from [`ssc_options_default`].
 */
typedef struct SscOptions {
  double eps_feas;
  double eps_gap;
  double stop_threshold;
  double eps_pool;
  double delta_unit;
  double deadline_s;
  enum SscMethod method;
  uint32_t workers;
  bool strict_sparsity;
} SscOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *ssc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ssc_version(void);

/**
 * Builds a matrix from `rows × cols` row-major entries.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles and `out` must be writable.
 */
enum SscStatus ssc_matrix_new(size_t rows, size_t cols, const double *data, struct SscMatrix **out);

/**
 * # Safety
 * `m` must come from [`ssc_matrix_new`] and not be used afterwards; null is ignored.
 */
void ssc_matrix_free(struct SscMatrix *m);

/**
 * Number of rows r, or 0 for null.
 *
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t ssc_matrix_rank(const struct SscMatrix *m);

/**
 * Number of nonzero columns kept, or 0 for null.
 *
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t ssc_matrix_ncols(const struct SscMatrix *m);

struct SscOptions ssc_options_default(void);

/**
 * Decides the condition for `m`. `options` may be null for defaults.
 *
 * # Safety
 * `m` must be a live matrix handle, `options` null or readable, `out` writable.
 */
enum SscStatus ssc_check(const struct SscMatrix *m,
                         const struct SscOptions *options,
                         struct SscReport **out);

/**
 * # Safety
 * `rep` must come from [`ssc_check`] and not be used afterwards; null is ignored.
 */
void ssc_report_free(struct SscReport *rep);

/**
 * Verdict of a report; `Unknown` for null.
 *
 * # Safety
 * `rep` must be null or a live report handle.
 */
enum SscVerdict ssc_report_verdict(const struct SscReport *rep);

/**
 * Reason of a report; `DeadlineReached` for null.
 *
 * # Safety
 * `rep` must be null or a live report handle.
 */
enum SscReason ssc_report_reason(const struct SscReport *rep);

/**
 * Copies the certificate point into `buf` and stores its length in `len`
 * (0 when the report has no certificate).
 *
 * # Safety
 * `rep` must be a live report handle, `len` writable and `buf` writable for
 * `cap` doubles (it may be null when `cap` is 0).
 */
enum SscStatus ssc_report_certificate(const struct SscReport *rep,
                                      double *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * The full report as pretty-printed JSON, or null on failure. Release with
 * [`ssc_string_free`].
 *
 * # Safety
 * `rep` must be null or a live report handle.
 */
char *ssc_report_to_json(const struct SscReport *rep);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; null is ignored.
 */
void ssc_string_free(char *s);

/**
 * Checks that `x` is feasible for `m` within `eps_feas` and has squared norm
 * at least `threshold`. Writes the answer to `ok`.
 *
 * # Safety
 * `m` must be a live matrix handle, `x` readable for `len` doubles and `ok` writable.
 */
enum SscStatus ssc_verify_certificate(const struct SscMatrix *m,
                                      const double *x,
                                      size_t len,
                                      double threshold,
                                      double eps_feas,
                                      bool *ok);

/**
 * Writes a random `r × n` matrix with `k` nonzeros per column, row-major,
 * into `out` (capacity `cap` doubles).
 *
 * # Safety
 * `out` must be writable for `cap` doubles.
 */
enum SscStatus ssc_generate(size_t r, size_t n, size_t k, uint64_t seed, double *out, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSC_H */
