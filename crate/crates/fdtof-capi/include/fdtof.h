/* C interface for the fdtof time-of-flight toolkit.
 *
 * Scene points and signals are opaque handles; estimates come back in plain
 * structs. Every fallible call returns an FdtofStatus, and the message for
 * the most recent failure on the calling thread is available from
 * fdtof_last_error_message().
 *
 * Kept in sync with crates/fdtof-capi/src/lib.rs (cbindgen.toml holds the
 * generation settings for environments with cbindgen installed).
 */

#ifndef FDTOF_H
#define FDTOF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible entry point. */
typedef enum FdtofStatus {
  FDTOF_STATUS_OK = 0,
  FDTOF_STATUS_INVALID_ARGUMENT = 1,
  FDTOF_STATUS_DEGENERATE_SIGNAL = 2,
  FDTOF_STATUS_INSUFFICIENT_BANDWIDTH = 3,
  FDTOF_STATUS_INSUFFICIENT_CYCLES = 4,
  FDTOF_STATUS_INCONSISTENT_EXPOSURE = 5,
  FDTOF_STATUS_UNDEFINED_METRIC = 6,
  FDTOF_STATUS_ESTIMATOR_MISMATCH = 7,
  FDTOF_STATUS_PARSE_ERROR = 8,
  FDTOF_STATUS_IO_ERROR = 9,
  FDTOF_STATUS_NULL_POINTER = 10,
  FDTOF_STATUS_PANIC = 11,
} FdtofStatus;

/* Flag channel of an estimate. */
typedef enum FdtofPeakStatus {
  FDTOF_PEAK_STATUS_OK = 0,
  FDTOF_PEAK_STATUS_NOT_CONVERGED = 1,
  FDTOF_PEAK_STATUS_DEGENERATE = 2,
  FDTOF_PEAK_STATUS_EXPOSURE_TONE_OUT_OF_BAND = 3,
} FdtofPeakStatus;

/* One recovered return. */
typedef struct FdtofTonePeak {
  /* Recovered object depth, meters. */
  double depth_m;
  /* Recovered path amplitude. */
  double amplitude;
  /* Peak magnitude over spectral median, >= 1. */
  double peak_quality;
  FdtofPeakStatus status;
} FdtofTonePeak;

/* Result of the phase-correlation pipeline. */
typedef struct FdtofDepthEstimate {
  /* Recovered object depth, meters. */
  double depth_m;
  /* Recovered correlation amplitude (alpha/2 for a single return). */
  double amplitude;
  /* Amplitude-based confidence in [0, 1]. */
  double confidence;
} FdtofDepthEstimate;

/* Opaque scene point under construction: returns plus an ambient level. */
typedef struct FdtofScenePoint FdtofScenePoint;

/* Opaque sampled signal. */
typedef struct FdtofSignal FdtofSignal;

/* Message for the most recent failure on this thread, or NULL if the last
 * call succeeded. Valid until the next failing call on the same thread. */
const char *fdtof_last_error_message(void);

/* Speed of light used throughout, m/s. */
double fdtof_speed_of_light(void);

/* --- Scene points ------------------------------------------------------- */

/* Create a scene point with the given ambient level and no returns yet.
 * Free with fdtof_scene_point_free. */
FdtofScenePoint *fdtof_scene_point_new(double ambient);

/* Append one return (amplitude, round-trip path length in meters). */
FdtofStatus fdtof_scene_point_add_path(FdtofScenePoint *point,
                                       double amplitude,
                                       double path_length_m);

void fdtof_scene_point_free(FdtofScenePoint *point);

/* --- Synthesis ---------------------------------------------------------- */

/* Swept-frequency capture over n frequencies from f_min_hz to f_max_hz
 * inclusive. On success *out holds a new signal handle. */
FdtofStatus fdtof_synth_fd_sweep(const FdtofScenePoint *point,
                                 double f_min_hz,
                                 double f_max_hz,
                                 size_t n,
                                 FdtofSignal **out);

/* Phase-correlation capture at f_mod_hz over the given correlation shifts
 * (seconds, strictly increasing). */
FdtofStatus fdtof_synth_phase_correlation(const FdtofScenePoint *point,
                                          double f_mod_hz,
                                          const double *taus,
                                          size_t n_taus,
                                          FdtofSignal **out);

/* Integrating-camera capture: swept frequencies with exposure exposure_s. */
FdtofStatus fdtof_synth_slow_sweep(const FdtofScenePoint *point,
                                   double f_min_hz,
                                   double f_max_hz,
                                   size_t n,
                                   double exposure_s,
                                   FdtofSignal **out);

/* --- Signals ------------------------------------------------------------ */

/* Number of samples in a signal; 0 for a null handle. */
size_t fdtof_signal_len(const FdtofSignal *signal);

/* Copy the primal-domain coordinates into buf (capacity cap doubles).
 * Fails unless cap is at least the signal length. */
FdtofStatus fdtof_signal_coordinates(const FdtofSignal *signal,
                                     double *buf,
                                     size_t cap);

/* Copy the sample values into buf (capacity cap doubles). */
FdtofStatus fdtof_signal_samples(const FdtofSignal *signal,
                                 double *buf,
                                 size_t cap);

/* Additive Gaussian noise at snr_db (pass INFINITY for a noiseless copy)
 * with the given seed; a new handle is returned in *out. */
FdtofStatus fdtof_signal_add_noise(const FdtofSignal *signal,
                                   double snr_db,
                                   uint64_t seed,
                                   FdtofSignal **out);

void fdtof_signal_free(FdtofSignal *signal);

/* --- Estimation --------------------------------------------------------- */

/* Interpolated-periodogram depth estimate of a swept-frequency signal. */
FdtofStatus fdtof_estimate_tone_interp(const FdtofSignal *signal,
                                       FdtofTonePeak *out);

/* Iteratively refined depth estimate of a swept-frequency signal. Pass a
 * negative init_delay_s to initialize from the periodogram; a positive
 * value seeds the refinement at that dual-domain delay (seconds). */
FdtofStatus fdtof_estimate_tone_qf(const FdtofSignal *signal,
                                   double init_delay_s,
                                   FdtofTonePeak *out);

/* Separate up to max_k returns as spectral peaks. *out_n receives the
 * number of peaks written to out (capacity cap). */
FdtofStatus fdtof_separate_multipath(const FdtofSignal *signal,
                                     size_t max_k,
                                     FdtofTonePeak *out,
                                     size_t cap,
                                     size_t *out_n);

/* Depth estimate from an integrating-camera signal captured over the given
 * sweep with exposure exposure_s. */
FdtofStatus fdtof_estimate_depth_slow(const FdtofSignal *signal,
                                      double f_min_hz,
                                      double f_max_hz,
                                      size_t n,
                                      double exposure_s,
                                      FdtofTonePeak *out);

/* Full phase-correlation pipeline: synthesize four buckets at f_mod_hz,
 * add noise at snr_db (INFINITY for noiseless), recover depth. */
FdtofStatus fdtof_estimate_depth_phase(const FdtofScenePoint *point,
                                       double f_mod_hz,
                                       double snr_db,
                                       uint64_t seed,
                                       FdtofDepthEstimate *out);

/* --- Scalars ------------------------------------------------------------ */

/* Depth beyond which single-frequency phase wraps, c / (2 f). NaN for a
 * non-positive frequency. */
double fdtof_ambiguity_distance(double f_mod_hz);

/* Minimum resolvable path-length separation for a sweep, 1.2 c / (f_max -
 * f_min). NaN for an invalid sweep. */
double fdtof_axial_resolution(double f_min_hz, double f_max_hz);

/* ABI version of this library. */
int fdtof_abi_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FDTOF_H */
