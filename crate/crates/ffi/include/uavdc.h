#ifndef UAVDC_H
#define UAVDC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UavdcStatus {
  UAVDC_STATUS_OK = 0,
  UAVDC_STATUS_NULL_POINTER = 1,
  UAVDC_STATUS_INVALID_ARGUMENT = 2,
  UAVDC_STATUS_CONFIG = 3,
  UAVDC_STATUS_IO = 4,
  UAVDC_STATUS_MISSING_CHECKPOINT = 5,
  UAVDC_STATUS_EPISODE_OVER = 6,
  UAVDC_STATUS_BUFFER_TOO_SMALL = 7,
  UAVDC_STATUS_INTERNAL = 8,
  UAVDC_STATUS_PANIC = 9,
} UavdcStatus;

/**
 * Trained actor loaded from a checkpoint directory.
 */
typedef struct UavdcAgent UavdcAgent;

/**
 * Generated or loaded city map.
 */
typedef struct UavdcCity UavdcCity;

/**
 * One environment realization.
 */
typedef struct UavdcEnv UavdcEnv;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *uavdc_last_error(void);

/**
 * Rotary-wing propulsion power in watts at horizontal speed `v` (m/s),
 * with the default power-model parameters.
 */
double uavdc_propulsion_power(double v);

/**
 * Generate a city with the statistical building model.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum UavdcStatus uavdc_city_generate(double area_side,
                                     double alpha,
                                     double beta,
                                     double lambda_mean,
                                     uint64_t seed,
                                     struct UavdcCity **out);

/**
 * Load a map written by `uavdc generate-map`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum UavdcStatus uavdc_city_load(const char *path, struct UavdcCity **out);

/**
 * # Safety
 * `city` must be null or a handle from this library that has not been freed.
 */
void uavdc_city_free(struct UavdcCity *city);

/**
 * # Safety
 * `city` must be a live handle and `out` writable.
 */
enum UavdcStatus uavdc_city_building_count(const struct UavdcCity *city, size_t *out);

/**
 * Whether the straight segment between two 3-D points clears every building.
 *
 * # Safety
 * `p` and `q` must each point to three doubles; `out` must be writable.
 */
enum UavdcStatus uavdc_city_is_los(const struct UavdcCity *city,
                                   const double *p,
                                   const double *q,
                                   bool *out);

/**
 * Build the scenario described by a TOML configuration (null for the
 * defaults) and open evaluation realization `realization`.
 *
 * # Safety
 * `config_toml` must be null or NUL-terminated; `out` must be writable.
 */
enum UavdcStatus uavdc_env_new(const char *config_toml,
                               uint64_t realization,
                               struct UavdcEnv **out);

/**
 * # Safety
 * `env` must be null or a live handle from this library.
 */
void uavdc_env_free(struct UavdcEnv *env);

/**
 * Length of the observation vector.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum UavdcStatus uavdc_env_obs_dim(const struct UavdcEnv *env, size_t *out);

/**
 * Start a new episode and write the first observation.
 *
 * # Safety
 * `obs_out` must hold at least `capacity` doubles.
 */
enum UavdcStatus uavdc_env_reset(struct UavdcEnv *env, double *obs_out, size_t capacity);

/**
 * Fly one step with heading (rad) and speed (m/s).
 *
 * # Safety
 * `obs_out` must hold at least `capacity` doubles; the scalar outputs must
 * be writable.
 */
enum UavdcStatus uavdc_env_step(struct UavdcEnv *env,
                                double heading,
                                double speed,
                                double *obs_out,
                                size_t capacity,
                                double *reward,
                                bool *episode_over,
                                bool *terminated);

/**
 * Current UAV position and elapsed mission time.
 *
 * # Safety
 * `xy` must hold two doubles; `elapsed` must be writable.
 */
enum UavdcStatus uavdc_env_position(const struct UavdcEnv *env, double *xy, double *elapsed);

/**
 * Load a checkpoint directory written by `uavdc train`.
 *
 * # Safety
 * `dir` must be NUL-terminated; `out` must be writable.
 */
enum UavdcStatus uavdc_agent_load(const char *dir, struct UavdcAgent **out);

/**
 * # Safety
 * `agent` must be null or a live handle from this library.
 */
void uavdc_agent_free(struct UavdcAgent *agent);

/**
 * Noise-free action for an observation, as heading (rad) and speed (m/s).
 *
 * # Safety
 * `obs` must point to `len` doubles; `heading` and `speed` must be writable.
 */
enum UavdcStatus uavdc_agent_act(const struct UavdcAgent *agent,
                                 const double *obs,
                                 size_t len,
                                 double *heading,
                                 double *speed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVDC_H */
