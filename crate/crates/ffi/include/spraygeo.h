#ifndef SPRAYGEO_H
#define SPRAYGEO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum SgStatus {
  SgOk = 0,
  /**
   * Bad definition file, unresolved reference, or invalid configuration.
   */
  SgErrConfig = 1,
  /**
   * Runtime evaluation failure (division by zero, domain error, ...).
   */
  SgErrEval = 2,
  /**
   * A verification check failed (suite reports carry the details).
   */
  SgErrCheckFailed = 3,
  /**
   * Null pointer, bad UTF-8, or otherwise invalid argument.
   */
  SgErrInvalidArgument = 4,
  /**
   * A panic was caught at the FFI boundary.
   */
  SgErrPanic = 5,
} SgStatus;

/**
 * Opaque manifold handle.
 */
typedef struct SgManifold SgManifold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message for this thread into `buf` (truncating), and
 * return its full length in bytes (excluding the terminator).
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes (or be null with
 * `len` 0 to query the length).
 */
uintptr_t sg_last_error_message(char *buf, uintptr_t len);

/**
 * Load a manifold from the embedded catalog or a definition file path.
 *
 * # Safety
 * `name_or_path` must be a valid NUL-terminated string; `out` must be a
 * valid location to store the handle. The handle must be released with
 * [`sg_manifold_free`].
 */
enum SgStatus sg_manifold_load(const char *name_or_path, struct SgManifold **out);

/**
 * Load a manifold from TOML text rather than a file.
 *
 * # Safety
 * As for [`sg_manifold_load`].
 */
enum SgStatus sg_manifold_load_toml(const char *toml_text, struct SgManifold **out);

/**
 * Release a manifold handle.
 *
 * # Safety
 * `handle` must come from a load function and not be used afterwards.
 */
void sg_manifold_free(struct SgManifold *handle);

/**
 * Chart dimension of the manifold at its instantiated level.
 *
 * # Safety
 * `handle` must be a live manifold handle.
 */
uintptr_t sg_manifold_dim(const struct SgManifold *handle);

/**
 * Run a verification suite; on success `report_json_out` receives the JSON
 * report (free with [`sg_string_free`]). Returns `SgErrCheckFailed` when
 * the suite ran but some check failed; the report is still written.
 *
 * # Safety
 * `handle` must be live; `suite` a valid string; `report_json_out` writable.
 */
enum SgStatus sg_run_suite(const struct SgManifold *handle,
                           const char *suite,
                           uint64_t seed,
                           char **report_json_out);

/**
 * Evaluate the bilinear map B(x; u, v) on a chart. `out` receives `dim`
 * values.
 *
 * # Safety
 * Arrays must hold `dim` elements; `chart` may be null for the first chart.
 */
enum SgStatus sg_bilinear_eval(const struct SgManifold *handle,
                               const char *chart,
                               const double *x,
                               const double *u,
                               const double *v,
                               double *out);

/**
 * Apply the connection map K(x, u, v, w) = (x, w − B(x; u, v)); `out`
 * receives `dim` values (the tangent part).
 *
 * # Safety
 * As for [`sg_bilinear_eval`], with four input arrays.
 */
enum SgStatus sg_connection_map_eval(const struct SgManifold *handle,
                                     const char *chart,
                                     const double *x,
                                     const double *u,
                                     const double *v,
                                     const double *w,
                                     double *out);

/**
 * Integrate a geodesic and return the trajectory as CSV text
 * (free with [`sg_string_free`]). `method` is "rk4" or "euler"; null means
 * rk4. `chart` may be null for the first chart.
 *
 * # Safety
 * `x0`/`v0` must hold `dim` elements; `csv_out` must be writable.
 */
enum SgStatus sg_geodesic_csv(const struct SgManifold *handle,
                              const char *chart,
                              const double *x0,
                              const double *v0,
                              double t1,
                              double step,
                              const char *method,
                              char **csv_out);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPRAYGEO_H */
