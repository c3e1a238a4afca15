#ifndef ACMAG_H
#define ACMAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum AcmagStatus {
  ACMAG_STATUS_OK = 0,
  ACMAG_STATUS_NULL_POINTER = 1,
  ACMAG_STATUS_INVALID_ARGUMENT = 2,
  ACMAG_STATUS_MISSING_COHERENCE = 3,
  ACMAG_STATUS_ODD_PULSE_COUNT_AT_RESONANCE = 4,
  ACMAG_STATUS_OFF_RESONANCE = 5,
  ACMAG_STATUS_NOT_CONVERGED = 6,
  ACMAG_STATUS_INVALID_CONFIG = 7,
  ACMAG_STATUS_IO = 8,
  ACMAG_STATUS_PANIC = 9,
  ACMAG_STATUS_INTERNAL = 10,
} AcmagStatus;

typedef enum AcmagFamily {
  ACMAG_FAMILY_HAHN = 0,
  ACMAG_FAMILY_CPMG = 1,
  ACMAG_FAMILY_XY4 = 2,
  ACMAG_FAMILY_XY8 = 3,
} AcmagFamily;

typedef enum AcmagReadout {
  ACMAG_READOUT_QUADRATURE = 0,
  ACMAG_READOUT_IN_PHASE = 1,
} AcmagReadout;

typedef struct AcmagField AcmagField;

typedef struct AcmagSensor AcmagSensor;

typedef struct AcmagSequence AcmagSequence;

/**
 * Timing summary of a sequence.
 */
typedef struct AcmagSequenceInfo {
  uint32_t n_pulses;
  double tau;
  double pi_width;
  double alpha;
  double free_precession_time;
  double total_time;
} AcmagSequenceInfo;

/**
 * Phase accumulation at one operating point.
 */
typedef struct AcmagPhase {
  double phi;
  double dphi_dphase;
  bool at_resonance;
  bool exact_formula;
} AcmagPhase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *acmag_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *acmag_version(void);

/**
 * Creates a field `B cos(2π f t + φ)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_field_new(double amplitude,
                                 double frequency,
                                 double initial_phase,
                                 struct AcmagField **out);

/**
 * Sets the phase shift `Δφ` added to the initial phase.
 *
 * # Safety
 * `field` must be a live handle from [`acmag_field_new`].
 */
enum AcmagStatus acmag_field_set_phase_shift(struct AcmagField *field, double phase_shift);

/**
 * # Safety
 * `field` must be NULL or a handle from [`acmag_field_new`] not yet freed.
 */
void acmag_field_free(struct AcmagField *field);

/**
 * Creates `family-repetitions` with pulse interval `tau` and π width `pi_width`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_sequence_new(enum AcmagFamily family,
                                    uint32_t repetitions,
                                    double tau,
                                    double pi_width,
                                    struct AcmagSequence **out);

/**
 * Like [`acmag_sequence_new`] with `tau` chosen so that `tau + pi_width = 1/(2 frequency)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_sequence_new_resonant(enum AcmagFamily family,
                                             uint32_t repetitions,
                                             double frequency,
                                             double pi_width,
                                             struct AcmagSequence **out);

/**
 * # Safety
 * `seq` must be a live sequence handle.
 */
enum AcmagStatus acmag_sequence_set_readout(struct AcmagSequence *seq, enum AcmagReadout readout);

/**
 * Replaces the pulse interval.
 *
 * # Safety
 * `seq` must be a live sequence handle.
 */
enum AcmagStatus acmag_sequence_set_tau(struct AcmagSequence *seq, double tau);

/**
 * # Safety
 * `seq` must be a live sequence handle and `out` valid for writes.
 */
enum AcmagStatus acmag_sequence_info(const struct AcmagSequence *seq,
                                     struct AcmagSequenceInfo *out);

/**
 * # Safety
 * `seq` must be NULL or a sequence handle not yet freed.
 */
void acmag_sequence_free(struct AcmagSequence *seq);

/**
 * Reference ensemble: contrast 0.03, photon ratio 0.917, 60 centres and the
 * measured coherence table.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_sensor_default(struct AcmagSensor **out);

/**
 * Ensemble with no coherence entries; add them with [`acmag_sensor_set_coherence`].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_sensor_new(double gamma_e,
                                  uint32_t n_nv,
                                  double r0,
                                  double r1,
                                  struct AcmagSensor **out);

/**
 * Adds or replaces the `(T2, p)` entry for `n_pulses`. A negative
 * `photon_ratio` keeps the ensemble's own ratio.
 *
 * # Safety
 * `sensor` must be a live sensor handle.
 */
enum AcmagStatus acmag_sensor_set_coherence(struct AcmagSensor *sensor,
                                            uint32_t n_pulses,
                                            double t2,
                                            double p,
                                            double photon_ratio);

/**
 * # Safety
 * `sensor` must be NULL or a sensor handle not yet freed.
 */
void acmag_sensor_free(struct AcmagSensor *sensor);

/**
 * Pulse interval that satisfies the accumulation condition.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcmagStatus acmag_resonance_tau(double frequency, double pi_width, double *out);

/**
 * Closed-form phase and its derivative with respect to the field phase.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_phase(const struct AcmagField *field,
                             const struct AcmagSequence *seq,
                             const struct AcmagSensor *sensor,
                             struct AcmagPhase *out);

/**
 * Phase by direct quadrature with `nodes_per_half_period` Simpson nodes.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_quadrature_phase(const struct AcmagField *field,
                                        const struct AcmagSequence *seq,
                                        const struct AcmagSensor *sensor,
                                        uint32_t nodes_per_half_period,
                                        double *out);

/**
 * Normalized magnetometry signal.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_signal(const struct AcmagField *field,
                              const struct AcmagSequence *seq,
                              const struct AcmagSensor *sensor,
                              double *out);

/**
 * Same signal obtained by propagating the density matrix.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_density_signal(const struct AcmagField *field,
                                      const struct AcmagSequence *seq,
                                      const struct AcmagSensor *sensor,
                                      double *out);

/**
 * Linear and exact signal deviations for a phase shift `dphi`.
 *
 * # Safety
 * Handles must be live; both outputs valid for writes.
 */
enum AcmagStatus acmag_signal_deviation(const struct AcmagField *field,
                                        const struct AcmagSequence *seq,
                                        const struct AcmagSensor *sensor,
                                        double dphi,
                                        double *out_linear,
                                        double *out_exact);

/**
 * Single-centre measurement variance in photons².
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_variance(const struct AcmagField *field,
                                const struct AcmagSequence *seq,
                                const struct AcmagSensor *sensor,
                                double *out);

/**
 * Full and long-time-approximation SNR after `n_measurements` repetitions.
 *
 * # Safety
 * Handles must be live; both outputs valid for writes.
 */
enum AcmagStatus acmag_snr(const struct AcmagField *field,
                           const struct AcmagSequence *seq,
                           const struct AcmagSensor *sensor,
                           double dphi,
                           uint64_t n_measurements,
                           double *out_full,
                           double *out_approx);

/**
 * Phase sensitivity in rad/√Hz using the sensor's `T2` for `n_pulses`.
 *
 * # Safety
 * `sensor` must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_phase_sensitivity(const struct AcmagSensor *sensor,
                                         double amplitude,
                                         uint32_t n_pulses,
                                         double *out);

/**
 * Upper limit of the linear phase-shift regime on resonance.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum AcmagStatus acmag_phase_shift_limit(const struct AcmagField *field,
                                         const struct AcmagSequence *seq,
                                         const struct AcmagSensor *sensor,
                                         double *out);

/**
 * Validates a TOML scenario config and writes its outputs. `out_dir` may
 * be NULL to use the config's own; `threads = 0` uses every core.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out_dir` NULL or one.
 */
enum AcmagStatus acmag_run_scenario(const char *config_toml, const char *out_dir, uint32_t threads);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACMAG_H */
