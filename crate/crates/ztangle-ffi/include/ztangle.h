#ifndef ZTANGLE_H
#define ZTANGLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum ZtStatus {
  /**
   * Success.
   */
  ZtStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  ZtStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8 or not valid JSON.
   */
  ZtStatus_Parse = 2,
  /**
   * Arguments were structurally valid but rejected (unknown model or
   * flip name, wrong rapidity counts, boundary mismatch, ...).
   */
  ZtStatus_InvalidArgument = 3,
  /**
   * The surface violates an invariant.
   */
  ZtStatus_InvalidSurface = 4,
  /**
   * The flip does not apply at the given anchor.
   */
  ZtStatus_FlipRejected = 5,
  /**
   * Evaluation failed (weight outside its validity range, interior too
   * large for brute-force summation, ...).
   */
  ZtStatus_EvalFailed = 6,
} ZtStatus;

/**
 * Opaque handle to a surface.
 */
typedef struct ZtSurface ZtSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build the flat `width` x `height` starting surface. `p_values` must hold
 * `height` entries and `q_values` `width` entries. Returns null on invalid
 * arguments. Free with `zt_surface_free`.
 */
struct ZtSurface *zt_surface_new_flat(uintptr_t width,
                                      uintptr_t height,
                                      const double *p_values,
                                      const double *q_values);

/**
 * Deserialize a surface from its canonical JSON form. On success writes the
 * new handle to `out` and returns `Ok`.
 */
enum ZtStatus zt_surface_from_json(const char *json, struct ZtSurface **out);

/**
 * Serialize the surface to its canonical JSON form. Returns a string owned
 * by the caller (release with `zt_string_free`), or null if `s` is null.
 */
char *zt_surface_to_json(const struct ZtSurface *s);

/**
 * Check all surface invariants. Returns `Ok` for a valid surface and
 * `InvalidSurface` otherwise; use `zt_surface_violations` for details.
 */
enum ZtStatus zt_surface_validate(const struct ZtSurface *s);

/**
 * JSON array of human-readable invariant violations (empty for a valid
 * surface). Caller frees with `zt_string_free`; null if `s` is null.
 */
char *zt_surface_violations(const struct ZtSurface *s);

/**
 * Apply one local rewrite in place. `kind` is the template name ("F15A",
 * "F24_3", "F33_2", ...), `inverse` selects the inverse move, and
 * `(i, j, k)` is the anchor cell. `r_value` is consumed only when the
 * template introduces a new loop (`has_r` must be true in that case).
 */
enum ZtStatus zt_flip_apply(struct ZtSurface *s,
                            const char *kind,
                            bool inverse,
                            int64_t i,
                            int64_t j,
                            int64_t k,
                            double r_value,
                            bool has_r);

/**
 * Brute-force partition function of the surface's spin graph under the
 * named model ("ising" or "fishingnet"). `boundary_json` maps "[i,j,k]"
 * keys to boundary spin values. Writes the complex result to `out_re`,
 * `out_im`.
 */
enum ZtStatus zt_partition(const struct ZtSurface *s,
                           const char *model,
                           const char *boundary_json,
                           double *out_re,
                           double *out_im);

/**
 * Run a flip script (JSON array of `{"flip", "direction", "anchor",
 * "r_value"}` objects) against the surface, then compare the rewritten
 * partition function with the accumulated ledger factor times the original.
 * Writes the relative residual to `out_residual`.
 */
enum ZtStatus zt_z_invariance(const struct ZtSurface *s,
                              const char *script_json,
                              const char *model,
                              const char *boundary_json,
                              double *out_residual);

/**
 * Release a surface handle. Null is a no-op.
 */
void zt_surface_free(struct ZtSurface *s);

/**
 * Release a string previously returned by this library. Null is a no-op.
 */
void zt_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ZTANGLE_H */
