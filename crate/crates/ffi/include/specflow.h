#ifndef SPECFLOW_H
#define SPECFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum SpecflowStatus {
  SPECFLOW_STATUS_OK = 0,
  SPECFLOW_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid input, non-equivariant data or an unsupported request.
   */
  SPECFLOW_STATUS_VALIDATION = 2,
  /**
   * Partition, rank or extrapolation failure.
   */
  SPECFLOW_STATUS_NUMERICAL = 3,
  /**
   * Two routes that must agree did not.
   */
  SPECFLOW_STATUS_INCONSISTENT = 4,
  SPECFLOW_STATUS_PANIC = 5,
} SpecflowStatus;

typedef enum SpecflowVariant {
  SPECFLOW_VARIANT_LORENTZIAN = 0,
  SPECFLOW_VARIANT_RIEMANNIAN = 1,
} SpecflowVariant;

typedef enum SpecflowConvention {
  SPECFLOW_CONVENTION_STRICT = 0,
  SPECFLOW_CONVENTION_INCLUSIVE = 1,
} SpecflowConvention;

/**
 * Unitary symmetry with its character decomposition.
 */
typedef struct SpecflowAction SpecflowAction;

/**
 * Operator family (sampled matrices, eigenvalue curves or mode blocks).
 */
typedef struct SpecflowFamily SpecflowFamily;

typedef struct SpecflowComplex {
  double re;
  double im;
} SpecflowComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *specflow_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *specflow_version(void);

/**
 * Parses a family from its JSON form into `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpecflowStatus specflow_family_from_json(const char *json, struct SpecflowFamily **out);

/**
 * # Safety
 * `family` must come from [`specflow_family_from_json`] and not be used
 * afterwards. Null is ignored.
 */
void specflow_family_free(struct SpecflowFamily *family);

/**
 * Decomposes an `n × n` unitary given row-major as interleaved `re, im`
 * pairs (`2n²` doubles).
 *
 * # Safety
 * `data` must point to `2·n·n` doubles and `out` must be valid.
 */
enum SpecflowStatus specflow_action_from_unitary(size_t n,
                                                 const double *data,
                                                 struct SpecflowAction **out);

/**
 * Number of distinct characters of the action.
 *
 * # Safety
 * `action` must be a live handle or null.
 */
size_t specflow_action_character_count(const struct SpecflowAction *action);

/**
 * # Safety
 * `action` must come from [`specflow_action_from_unitary`] and not be used
 * afterwards. Null is ignored.
 */
void specflow_action_free(struct SpecflowAction *action);

/**
 * Equivariant spectral flow. `action` may be null (no symmetry, or the
 * family's own characters). `plain` receives the non-equivariant flow.
 *
 * # Safety
 * Handles must be live; `value` and `plain` must be valid pointers.
 */
enum SpecflowStatus specflow_sfl(const struct SpecflowFamily *family,
                                 const struct SpecflowAction *action,
                                 struct SpecflowComplex *value,
                                 int64_t *plain);

/**
 * Equivariant APS index together with its spectral-flow expression.
 *
 * # Safety
 * Handles must be live; `index` and `flow_side_value` must be valid.
 */
enum SpecflowStatus specflow_index(const struct SpecflowFamily *family,
                                   const struct SpecflowAction *action,
                                   enum SpecflowVariant variant,
                                   enum SpecflowConvention convention,
                                   struct SpecflowComplex *index,
                                   struct SpecflowComplex *flow_side_value);

/**
 * η-invariant of a spectrum in JSON form: the closed form when available,
 * otherwise the Abel-summation estimate, whose error bound goes to
 * `error_estimate` (0 for the closed form).
 *
 * # Safety
 * `json` must be NUL-terminated; outputs must be valid pointers.
 */
enum SpecflowStatus specflow_eta(const char *json,
                                 struct SpecflowComplex *value,
                                 double *error_estimate);

/**
 * Seeded index/spectral-flow identity suite; `passed` receives the number
 * of instances that satisfied every check.
 *
 * # Safety
 * `passed` must be a valid pointer.
 */
enum SpecflowStatus specflow_verify_identity(uint64_t seed, size_t n, size_t *passed);

/**
 * JSON form of a family; free the result with [`specflow_string_free`].
 *
 * # Safety
 * `family` must be live and `out` valid.
 */
enum SpecflowStatus specflow_family_to_json(const struct SpecflowFamily *family, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void specflow_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECFLOW_H */
