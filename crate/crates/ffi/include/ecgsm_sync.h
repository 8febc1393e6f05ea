#ifndef ECGSM_SYNC_H
#define ECGSM_SYNC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EcgsmStatus {
  ECGSM_STATUS_OK = 0,
  ECGSM_STATUS_NULL_POINTER = 1,
  ECGSM_STATUS_INVALID_ARGUMENT = 2,
  ECGSM_STATUS_FAILED = 3,
  ECGSM_STATUS_PANIC = 4,
} EcgsmStatus;

typedef enum EcgsmBand {
  ECGSM_BAND_LOW = 0,
  ECGSM_BAND_HIGH = 1,
} EcgsmBand;

typedef enum EcgsmChannel {
  ECGSM_CHANNEL_ST = 0,
  ECGSM_CHANNEL_TU1_2 = 1,
  ECGSM_CHANNEL_TU50 = 2,
} EcgsmChannel;

typedef enum EcgsmSyncOutcome {
  ECGSM_SYNC_OUTCOME_SYNCED = 0,
  ECGSM_SYNC_OUTCOME_TIMEOUT = 1,
  ECGSM_SYNC_OUTCOME_FALSE_SYNC = 2,
} EcgsmSyncOutcome;

typedef struct EcgsmMfd EcgsmMfd;

typedef struct EcgsmSimulator EcgsmSimulator;

/**
 * Simulation settings shared by all trials of a simulator handle.
 */
typedef struct EcgsmScenario {
  enum EcgsmChannel channel;
  enum EcgsmBand band;
  double snr_db;
  uint64_t seed;
  /**
   * Non-zero: attempt decoding after every repetition.
   */
  uint8_t every_rep;
} EcgsmScenario;

typedef struct EcgsmTrialResult {
  enum EcgsmSyncOutcome outcome;
  /**
   * NaN when nothing was decoded.
   */
  double t_sync_s;
  double t_mfd_s;
  double resid_fo_hz;
  double resid_fo_ppm;
  /**
   * Valid when `has_resid_to` is non-zero.
   */
  int64_t resid_to_sym;
  uint8_t has_resid_to;
  uint32_t mfd_mfs;
  double fo_true_hz;
} EcgsmTrialResult;

typedef struct EcgsmMfdResult {
  /**
   * Non-zero once the detector has decided.
   */
  uint8_t decided;
  /**
   * Non-zero for a hit, zero for a timeout.
   */
  uint8_t hit;
  size_t candidates[3];
  double coarse_fo_hz;
  uint32_t mfs_used;
  uint64_t decided_at_sample;
} EcgsmMfdResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *ecgsm_last_error(void);

/**
 * Single-tone frequency RMS bound for `n` samples.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum EcgsmStatus ecgsm_crlb_rms_hz(double snr_db, size_t n, enum EcgsmBand band, double *out);

/**
 * SNR in the 200 kHz noise bandwidth for an input signal level in dBm.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum EcgsmStatus ecgsm_isl_to_snr(double isl_dbm, enum EcgsmBand band, double *out);

/**
 * Carrier offset estimated from `n_windows` FB captures of `window_len`
 * complex samples each, stored back to back as interleaved f32 I/Q.
 *
 * # Safety
 * `iq` must point to `2 * n_windows * window_len` floats and `out_hz` to a
 * double.
 */
enum EcgsmStatus ecgsm_fine_foe(const float *iq,
                                size_t n_windows,
                                size_t window_len,
                                enum EcgsmBand band,
                                double *out_hz);

/**
 * Creates a simulator for full-sync trials.
 *
 * # Safety
 * `scenario` must point to a valid struct and `out` to a writable pointer.
 */
enum EcgsmStatus ecgsm_simulator_new(const struct EcgsmScenario *scenario,
                                     struct EcgsmSimulator **out);

/**
 * Runs trial `index`. The same handle and index always give the same
 * result.
 *
 * # Safety
 * `sim` must come from [`ecgsm_simulator_new`]; `out` must be writable.
 */
enum EcgsmStatus ecgsm_simulator_run_trial(const struct EcgsmSimulator *sim,
                                           uint64_t index,
                                           struct EcgsmTrialResult *out);

/**
 * # Safety
 * `sim` must come from [`ecgsm_simulator_new`] and not be used afterwards.
 * Null is ignored.
 */
void ecgsm_simulator_free(struct EcgsmSimulator *sim);

/**
 * Creates a streaming multiframe detector giving up after `max_mfs`
 * multiframes.
 *
 * # Safety
 * `out` must be writable.
 */
enum EcgsmStatus ecgsm_mfd_new(enum EcgsmBand band, uint32_t max_mfs, struct EcgsmMfd **out);

/**
 * Feeds `n_samples` consecutive samples (interleaved f32 I/Q). `out`
 * receives the decision state after the call; samples after a decision
 * are ignored.
 *
 * # Safety
 * `mfd` must come from [`ecgsm_mfd_new`], `iq` must point to
 * `2 * n_samples` floats (may be null when `n_samples` is 0), and `out`
 * must be writable.
 */
enum EcgsmStatus ecgsm_mfd_push(struct EcgsmMfd *mfd,
                                const float *iq,
                                size_t n_samples,
                                struct EcgsmMfdResult *out);

/**
 * # Safety
 * `mfd` must come from [`ecgsm_mfd_new`] and not be used afterwards. Null
 * is ignored.
 */
void ecgsm_mfd_free(struct EcgsmMfd *mfd);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECGSM_SYNC_H */
