#ifndef NCFACTOR_H
#define NCFACTOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NcfStatus {
  NcfStatus_Ok = 0,
  NcfStatus_NullPointer = 1,
  NcfStatus_InvalidUtf8 = 2,
  NcfStatus_BadField = 3,
  NcfStatus_Parse = 4,
  NcfStatus_ZeroPolynomial = 5,
  NcfStatus_VerificationFailed = 6,
  NcfStatus_Exhausted = 7,
  NcfStatus_Internal = 8,
  NcfStatus_OutOfRange = 9,
  NcfStatus_Other = 10,
} NcfStatus;

/**
 * Opaque factorization result.
 */
typedef struct NcfFactorization NcfFactorization;

/**
 * Opaque finite field.
 */
typedef struct NcfField NcfField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. Valid until the next call.
 */
const char *ncf_last_error(void);

/**
 * Create a field from a `p^k` spec.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NcfStatus ncf_field_new(const char *spec, struct NcfField **out);

/**
 * # Safety
 * `f` must come from [`ncf_field_new`] and not be used afterwards.
 */
void ncf_field_free(struct NcfField *f);

/**
 * Factor `expr` into irreducibles. `route` is 0 for left, 1 for right.
 * Returns `VerificationFailed` (with the handle still set) when the product
 * check fails.
 *
 * # Safety
 * Pointers must be valid; `expr` NUL-terminated.
 */
enum NcfStatus ncf_factor(const struct NcfField *field,
                          const char *expr,
                          uint64_t seed,
                          uint32_t route,
                          struct NcfFactorization **out);

/**
 * # Safety
 * `f` must come from [`ncf_factor`] and not be used afterwards.
 */
void ncf_factorization_free(struct NcfFactorization *f);

/**
 * Number of irreducible factors, or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
uintptr_t ncf_factorization_len(const struct NcfFactorization *f);

/**
 * 1 if the product check passed, 0 otherwise.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
int32_t ncf_factorization_verified(const struct NcfFactorization *f);

/**
 * Factor `i` as a sum of monomials (or a size summary for large degree).
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum NcfStatus ncf_factorization_factor(const struct NcfFactorization *f, uintptr_t i, char **out);

/**
 * The factorization as JSON.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum NcfStatus ncf_factorization_json(const struct NcfFactorization *f, char **out);

/**
 * Write 1 to `out` if `expr` is irreducible, else 0.
 *
 * # Safety
 * Pointers must be valid; `expr` NUL-terminated.
 */
enum NcfStatus ncf_is_irreducible(const struct NcfField *field,
                                  const char *expr,
                                  uint64_t seed,
                                  int32_t *out);

/**
 * Write 1 to `out` if the two polynomials are stable associates, else 0.
 *
 * # Safety
 * Pointers must be valid; expressions NUL-terminated.
 */
enum NcfStatus ncf_stable_associates(const struct NcfField *field,
                                     const char *expr1,
                                     const char *expr2,
                                     uint64_t seed,
                                     int32_t *out);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library, not used afterwards.
 */
void ncf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCFACTOR_H */
