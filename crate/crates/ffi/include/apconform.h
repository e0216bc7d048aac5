#ifndef APCONFORM_H
#define APCONFORM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum ApcStatus {
  APC_STATUS_OK = 0,
  APC_STATUS_NULL_POINTER = 1,
  APC_STATUS_INVALID_UTF8 = 2,
  APC_STATUS_CONFIG = 3,
  APC_STATUS_EVALUATION = 4,
  APC_STATUS_UNKNOWN_TENSOR = 5,
  APC_STATUS_BUFFER_TOO_SMALL = 6,
  APC_STATUS_PANIC = 7,
} ApcStatus;

/**
 * Opaque handle to a validated space configuration.
 */
typedef struct ApcSpace ApcSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *apc_last_error(void);

/**
 * Builds a space from a JSON configuration document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ApcStatus apc_space_from_json(const char *json, struct ApcSpace **out);

/**
 * Builds a space from `dimension`² frame expressions in row-major order
 * (row i holds the components of the i-th frame vector) and a conformal
 * factor expression.
 *
 * # Safety
 * `frame` must point to `dimension * dimension` NUL-terminated strings,
 * `rho` must be NUL-terminated, and `out` writable.
 */
enum ApcStatus apc_space_new(size_t dimension,
                             const char *const *frame,
                             const char *rho,
                             struct ApcSpace **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `space` must come from this library and not be used afterwards.
 */
void apc_space_free(struct ApcSpace *space);

/**
 * Dimension of the space, or 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t apc_space_dimension(const struct ApcSpace *space);

/**
 * Evaluates a named object (the `eval --tensor` names, e.g. "C", "T",
 * "conn-circ") at `point` and writes its components row-major into `out`.
 * `written` receives the component count; if `out_len` is too small the
 * call returns `BufferTooSmall` and only `written` is set.
 *
 * # Safety
 * `point` must hold `point_len` doubles, `out` must hold `out_len`
 * doubles, and `name`/`written` must be valid.
 */
enum ApcStatus apc_eval_tensor(const struct ApcSpace *space,
                               const char *name,
                               const double *point,
                               size_t point_len,
                               bool transformed,
                               double *out,
                               size_t out_len,
                               size_t *written);

/**
 * Runs the verification suite. `report_json` receives a JSON report to be
 * released with [`apc_string_free`]; `all_pass` receives the overall flag.
 * A `points` of 0 keeps the configured sample count.
 *
 * # Safety
 * `space` must be a live handle; `report_json` and `all_pass` writable.
 */
enum ApcStatus apc_check(const struct ApcSpace *space,
                         uint64_t seed,
                         size_t points,
                         char **report_json,
                         bool *all_pass);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void apc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APCONFORM_H */
