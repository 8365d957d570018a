#ifndef ORLICZ_VAR_H
#define ORLICZ_VAR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  OV_STATUS_OK = 0,
  OV_STATUS_NULL_POINTER = 1,
  OV_STATUS_INVALID_INPUT = 2,
  OV_STATUS_SYNTAX = 3,
  OV_STATUS_SEMANTIC = 4,
  OV_STATUS_DOMAIN = 5,
  OV_STATUS_NUMERICAL = 6,
  OV_STATUS_IO = 7,
  OV_STATUS_PANIC = 8,
} OvStatus;

/**
 * Nodal values on a problem grid.
 */
typedef struct OvField OvField;

/**
 * Parsed problem file together with its assembled problem.
 */
typedef struct OvProblem OvProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *ov_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next `ov_*` call on the same thread.
 */
const char *ov_last_error(void);

/**
 * Parses an `orlicz-var v1` problem text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
OvStatus ov_problem_parse(const char *text, OvProblem **out);

/**
 * Reads and parses a problem file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
OvStatus ov_problem_load(const char *path, OvProblem **out);

/**
 * # Safety
 * `p` must come from `ov_problem_parse`/`ov_problem_load` or be null.
 */
void ov_problem_free(OvProblem *p);

/**
 * Space dimension N, 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t ov_problem_dim(const OvProblem *p);

/**
 * Number of grid nodes, 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t ov_problem_node_count(const OvProblem *p);

/**
 * `φ_k*(x, s)` for component `k` (1-based).
 *
 * # Safety
 * `x` must point to `x_len` doubles; `out` must be writable.
 */
OvStatus ov_conjugate(const OvProblem *p,
                      size_t k,
                      const double *x,
                      size_t x_len,
                      double s,
                      double *out);

/**
 * Sobolev conjugate of the family's `φ_min**` at `(x, t)`.
 *
 * # Safety
 * `x` must point to `x_len` doubles; `out` must be writable.
 */
OvStatus ov_sobolev_forward(const OvProblem *p,
                            const double *x,
                            size_t x_len,
                            double t,
                            double *out);

/**
 * Wraps `len` nodal values (row-major, first axis slowest) on the problem grid.
 *
 * # Safety
 * `values` must point to `len` doubles; `out` must be writable.
 */
OvStatus ov_field_new(const OvProblem *p, const double *values, size_t len, OvField **out);

/**
 * Node count of a field, 0 for null.
 *
 * # Safety
 * `f` must be a live handle or null.
 */
size_t ov_field_len(const OvField *f);

/**
 * Copies the nodal values into `buf`, which must hold `ov_field_len(f)` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
OvStatus ov_field_values(const OvField *f, double *buf, size_t len);

/**
 * # Safety
 * `f` must come from an `ov_*` constructor or be null.
 */
void ov_field_free(OvField *f);

/**
 * Luxemburg norm of `u` for component `k` (1-based).
 *
 * # Safety
 * `p`, `u` must be live handles; `out` must be writable.
 */
OvStatus ov_luxemburg_norm(const OvProblem *p, size_t k, const OvField *u, double *out);

/**
 * Minimizes the energy from `u ≡ 0` with the problem's solver settings.
 * A run that stops before the gradient tolerance still returns its iterate,
 * with `*converged = false`.
 *
 * # Safety
 * `out_field`, `energy` and `converged` must be writable.
 */
OvStatus ov_solve(const OvProblem *p, OvField **out_field, double *energy, bool *converged);

/**
 * Runs the verify suite. `*passed` is false when a hard check fails; the
 * table (one row per check) is returned in `*table`, to be released with
 * `ov_string_free`. `table` may be null.
 *
 * # Safety
 * `passed` must be writable; `table` writable or null.
 */
OvStatus ov_verify(const OvProblem *p, uint64_t seed, bool *passed, char **table);

/**
 * # Safety
 * `s` must come from an `ov_*` function returning an owned string, or be null.
 */
void ov_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ORLICZ_VAR_H */
