#ifndef VMAC_H
#define VMAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VmacStatus {
  VMAC_STATUS_OK = 0,
  VMAC_STATUS_INVALID_ARGUMENT = 1,
  VMAC_STATUS_EMPTY_CANDIDATE_SET = 2,
  VMAC_STATUS_NONPOSITIVE_BUDGET = 3,
  VMAC_STATUS_NON_CONVERGENCE = 4,
  VMAC_STATUS_MC_VARIANCE_TOO_HIGH = 5,
  VMAC_STATUS_IO = 6,
  VMAC_STATUS_NULL_POINTER = 7,
  VMAC_STATUS_PANIC = 8,
} VmacStatus;

typedef enum VmacScenario {
  VMAC_SCENARIO_PARTITION = 0,
  VMAC_SCENARIO_SHARING = 1,
} VmacScenario;

typedef enum VmacBudget {
  /**
   * `|Z_k| * p_max` per transmitter.
   */
  VMAC_BUDGET_ACCESSIBLE = 0,
  /**
   * `N * p_max` per transmitter.
   */
  VMAC_BUDGET_FULL_BAND = 1,
} VmacBudget;

typedef struct VmacConfig VmacConfig;

typedef struct VmacGains VmacGains;

typedef struct VmacOutcome VmacOutcome;

/**
 * Scalar summary of one transmitter in a scenario outcome.
 */
typedef struct VmacTransmitterStats {
  size_t accessible_channels;
  size_t used_channels;
  size_t available_channels;
  /**
   * NaN when no channel was accessible.
   */
  double water_level;
  double rate;
  double rate_per_channel;
  double accessible_fraction;
  double spectral_efficiency;
} VmacTransmitterStats;

typedef struct VmacPartitionAsymptotics {
  double beta_star;
  double omega;
  double rate;
  double nse;
} VmacPartitionAsymptotics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vmac_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vmac_version(void);

/**
 * Creates a network of `k` transmitters and `n` channels at the given SNR
 * (noise variance 1).
 *
 * # Safety
 * `out_config` must be a valid pointer to writable storage for one handle.
 */
enum VmacStatus vmac_config_new(size_t k, size_t n, double snr_db, struct VmacConfig **out_config);

/**
 * # Safety
 * `config` must be NULL or a handle from `vmac_config_new` not yet freed.
 */
void vmac_config_free(struct VmacConfig *config);

/**
 * Draws the gain matrix of trial `trial` under `master_seed`.
 *
 * # Safety
 * `config` must be a live handle; `out_gains` must be writable.
 */
enum VmacStatus vmac_gains_sample(const struct VmacConfig *config,
                                  uint64_t master_seed,
                                  uint64_t trial,
                                  struct VmacGains **out_gains);

/**
 * Wraps a caller-supplied row-major `k x n` gain matrix (copied).
 *
 * # Safety
 * `data` must point to `k * n` readable doubles; `out_gains` must be writable.
 */
enum VmacStatus vmac_gains_from_array(size_t k,
                                      size_t n,
                                      const double *data,
                                      struct VmacGains **out_gains);

/**
 * Reads entry `(k, n)` (zero-based).
 *
 * # Safety
 * `gains` must be a live handle; `value` must be writable.
 */
enum VmacStatus vmac_gains_get(const struct VmacGains *gains, size_t k, size_t n, double *value);

/**
 * # Safety
 * `gains` must be NULL or a live handle.
 */
void vmac_gains_free(struct VmacGains *gains);

/**
 * Runs one scenario on one gain matrix. `bl_cap == 0` means no cap.
 *
 * # Safety
 * `config` and `gains` must be live handles; `out_outcome` must be writable.
 */
enum VmacStatus vmac_run(const struct VmacConfig *config,
                         const struct VmacGains *gains,
                         enum VmacScenario scenario,
                         size_t bl_cap,
                         enum VmacBudget budget,
                         struct VmacOutcome **out_outcome);

/**
 * # Safety
 * `outcome` must be a live handle; `nse` must be writable.
 */
enum VmacStatus vmac_outcome_nse(const struct VmacOutcome *outcome, double *nse);

/**
 * Number of transmitters in the outcome (0 for a NULL handle).
 *
 * # Safety
 * `outcome` must be NULL or a live handle.
 */
size_t vmac_outcome_num_transmitters(const struct VmacOutcome *outcome);

/**
 * # Safety
 * `outcome` must be a live handle; `stats` must be writable.
 */
enum VmacStatus vmac_outcome_transmitter(const struct VmacOutcome *outcome,
                                         size_t k,
                                         struct VmacTransmitterStats *stats);

/**
 * Copies transmitter `k`'s per-channel powers into `powers` (length `len`,
 * which must equal the channel count).
 *
 * # Safety
 * `outcome` must be a live handle; `powers` must hold `len` writable doubles.
 */
enum VmacStatus vmac_outcome_powers(const struct VmacOutcome *outcome,
                                    size_t k,
                                    double *powers,
                                    size_t len);

/**
 * # Safety
 * `outcome` must be NULL or a live handle.
 */
void vmac_outcome_free(struct VmacOutcome *outcome);

/**
 * Water-fills `budget` over channels with the given effective noise levels.
 * Powers are written in input order.
 *
 * # Safety
 * `noises` and `powers` must each hold `len` doubles; `water_level` must be
 * writable.
 */
enum VmacStatus vmac_water_fill(const double *noises,
                                size_t len,
                                double budget,
                                double *powers,
                                double *water_level);

/**
 * Large-system water level, accessible fraction, rate per channel and NSE of
 * the partition scenario with `k` transmitters.
 *
 * # Safety
 * `result` must be writable.
 */
enum VmacStatus vmac_partition_asymptotics(size_t k,
                                           double snr_db,
                                           struct VmacPartitionAsymptotics *result);

/**
 * Analytic BL cap for `k` transmitters on `n` channels (ceiling rounding).
 *
 * # Safety
 * `limit` must be writable.
 */
enum VmacStatus vmac_optimal_bl(size_t k, size_t n, double snr_db, size_t *limit);

/**
 * Water levels and rates per channel of the sharing scenario for
 * transmitters `1..=len`. Monte Carlo settings are the library defaults.
 *
 * # Safety
 * `levels` and `rates` must each hold `len` writable doubles.
 */
enum VmacStatus vmac_sharing_chain(size_t len, double snr_db, double *levels, double *rates);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VMAC_H */
