/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef NUMRANGE_H
#define NUMRANGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum NrStatus {
  NR_OK = 0,
  NR_NULL_POINTER = 1,
  NR_INVALID_ARGUMENT = 2,
  NR_PARSE = 3,
  NR_NOT_FOUND = 4,
  /**
   * Operators failed validation (not Hermitian, wrong dimension, ...).
   */
  NR_VALIDATION = 5,
  /**
   * An optimizer or eigensolver did not converge.
   */
  NR_NUMERICAL = 6,
  NR_IO = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  NR_PANIC = 8,
} NrStatus;

/**
 * A sampled point cloud.
 */
typedef struct NrCloud NrCloud;

/**
 * A convex hull.
 */
typedef struct NrHull NrHull;

/**
 * An observable triple with its catalog metadata.
 */
typedef struct NrInstance NrInstance;

/**
 * Sampler settings, mirrored from the library defaults by
 * [`nr_sampler_config_default`].
 */
typedef struct NrSamplerConfig {
  size_t n_dirs;
  size_t n_grid_a;
  size_t n_grid_b;
  uint64_t seed;
  size_t restarts;
  size_t max_iters;
} NrSamplerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *nr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nr_version(void);

struct NrSamplerConfig nr_sampler_config_default(void);

/**
 * Catalog instance by name (`oloid`, `cone`, `ising`, `xy`, `eg1`, `eg2`, `eg3`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_instance_from_name(const char *name, struct NrInstance **out_instance);

/**
 * Instance from the JSON document accepted by the CLI's `--file`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_instance_from_json(const char *json, struct NrInstance **out_instance);

/**
 * # Safety
 * `instance` must come from an `nr_instance_*` constructor and not be used afterwards.
 */
void nr_instance_free(struct NrInstance *instance);

/**
 * True when the instance's natural range is the symmetric one.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
bool nr_instance_is_symmetric(const struct NrInstance *instance);

/**
 * Π over the α × β Bloch grids of `config` (null for defaults).
 *
 * # Safety
 * Pointers must be live handles or null; `out_cloud` must be writable.
 */
enum NrStatus nr_sample_pi(const struct NrInstance *instance,
                           const struct NrSamplerConfig *config,
                           struct NrCloud **out_cloud);

/**
 * Π₊ of a swap-symmetric instance.
 *
 * # Safety
 * As for [`nr_sample_pi`].
 */
enum NrStatus nr_sample_pi_plus(const struct NrInstance *instance,
                                const struct NrSamplerConfig *config,
                                struct NrCloud **out_cloud);

/**
 * Number of points; 0 for null.
 *
 * # Safety
 * `cloud` must be a live handle or null.
 */
size_t nr_cloud_len(const struct NrCloud *cloud);

/**
 * Copies the points as `x0,y0,z0,x1,...` into `buffer`, which must hold
 * `capacity >= 3 * nr_cloud_len(cloud)` doubles.
 *
 * # Safety
 * `buffer` must be writable for `capacity` doubles.
 */
enum NrStatus nr_cloud_points(const struct NrCloud *cloud, double *buffer, size_t capacity);

/**
 * # Safety
 * `cloud` must come from a sampler and not be used afterwards.
 */
void nr_cloud_free(struct NrCloud *cloud);

/**
 * # Safety
 * `cloud` must be a live handle; `out_hull` must be writable.
 */
enum NrStatus nr_hull_build(const struct NrCloud *cloud, struct NrHull **out_hull);

/**
 * Maximum of `dir · v` over the hull (`dir` is normalized first).
 *
 * # Safety
 * `dir` must point to 3 doubles; `out_value` must be writable.
 */
enum NrStatus nr_hull_support(const struct NrHull *hull, const double *dir, double *out_value);

/**
 * Whether `point` lies in the hull within distance `eps`.
 *
 * # Safety
 * `point` must point to 3 doubles; `out_inside` must be writable.
 */
enum NrStatus nr_hull_contains(const struct NrHull *hull,
                               const double *point,
                               double eps,
                               bool *out_inside);

/**
 * Affine rank of the hull (0-3); -1 for null.
 *
 * # Safety
 * `hull` must be a live handle or null.
 */
int32_t nr_hull_rank(const struct NrHull *hull);

/**
 * # Safety
 * `hull` must come from [`nr_hull_build`] and not be used afterwards.
 */
void nr_hull_free(struct NrHull *hull);

/**
 * Minimum of `dir · F` over product states by alternating minimization;
 * the minimizing point is written to `out_point` when it is not null.
 *
 * # Safety
 * `dir` must point to 3 doubles, `out_point` to 3 writable doubles or null.
 */
enum NrStatus nr_seesaw_support(const struct NrInstance *instance,
                                const double *dir,
                                const struct NrSamplerConfig *config,
                                double *out_value,
                                double *out_point);

/**
 * Runs the boundary classification with default boundary settings and
 * returns the report as a JSON string, released with [`nr_string_free`].
 *
 * # Safety
 * Pointers must be live handles or null (config); `out_json` must be writable.
 */
enum NrStatus nr_classify_json(const struct NrInstance *instance,
                               const struct NrSamplerConfig *config,
                               char **out_json);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void nr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NUMRANGE_H */
