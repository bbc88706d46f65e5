//! C ABI for the fdtof toolkit.
//!
//! Scene points and signals are opaque handles created and freed through
//! this API; estimates come back in plain C structs. Every fallible call
//! returns an [`FdtofStatus`] code, and the message for the most recent
//! failure on the current thread is available via
//! [`fdtof_last_error_message`].
//!
//! The companion header lives at `include/fdtof.h` and is kept in sync with
//! this file (`cbindgen.toml` holds the generation config for environments
//! that have cbindgen installed).
//!
//! Thread safety: handles are not synchronized; do not share one handle
//! across threads without external locking. Distinct handles are fully
//! independent.

use fdtof::error::Error;
use fdtof::freq_domain::{self, PeakStatus, TonePeak};
use fdtof::phase_tof;
use fdtof::signal_model::{self, FrequencySweep, NoiseSpec, PathComponent, PrimalSignal, ScenePoint};
use fdtof::slow_tof::{self, SlowCaptureConfig};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdtofStatus {
    Ok = 0,
    InvalidArgument = 1,
    DegenerateSignal = 2,
    InsufficientBandwidth = 3,
    InsufficientCycles = 4,
    InconsistentExposure = 5,
    UndefinedMetric = 6,
    EstimatorMismatch = 7,
    ParseError = 8,
    IoError = 9,
    NullPointer = 10,
    Panic = 11,
}

/// Flag channel of an estimate, mirroring the library's peak status.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdtofPeakStatus {
    Ok = 0,
    NotConverged = 1,
    Degenerate = 2,
    ExposureToneOutOfBand = 3,
}

/// One recovered return.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FdtofTonePeak {
    /// Recovered object depth, meters.
    pub depth_m: f64,
    /// Recovered path amplitude.
    pub amplitude: f64,
    /// Peak magnitude over spectral median, >= 1.
    pub peak_quality: f64,
    pub status: FdtofPeakStatus,
}

/// Result of the phase-correlation pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FdtofDepthEstimate {
    /// Recovered object depth, meters.
    pub depth_m: f64,
    /// Recovered correlation amplitude (alpha/2 for a single return).
    pub amplitude: f64,
    /// Amplitude-based confidence in [0, 1].
    pub confidence: f64,
}

/// Opaque scene point under construction: returns plus an ambient level.
pub struct FdtofScenePoint {
    paths: Vec<PathComponent>,
    ambient: f64,
}

/// Opaque sampled signal.
pub struct FdtofSignal {
    inner: PrimalSignal,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error message had NUL").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FdtofStatus {
    match err {
        Error::InvalidArgument(_) => FdtofStatus::InvalidArgument,
        Error::DegenerateSignal(_) => FdtofStatus::DegenerateSignal,
        Error::InsufficientBandwidth(_) => FdtofStatus::InsufficientBandwidth,
        Error::InsufficientCycles(_) => FdtofStatus::InsufficientCycles,
        Error::InconsistentExposure(_) => FdtofStatus::InconsistentExposure,
        Error::UndefinedMetric(_) => FdtofStatus::UndefinedMetric,
        Error::EstimatorMismatch { .. } => FdtofStatus::EstimatorMismatch,
        Error::Parse { .. } => FdtofStatus::ParseError,
        Error::Pixel { source, .. } => status_of(source),
        Error::Io(_) => FdtofStatus::IoError,
        Error::Json(_) => FdtofStatus::ParseError,
    }
}

fn fail(err: Error) -> FdtofStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn null_pointer(what: &str) -> FdtofStatus {
    set_error(format!("{what} must not be null"));
    FdtofStatus::NullPointer
}

/// Run a closure, translating panics into a status code instead of
/// unwinding across the FFI boundary.
fn guarded(f: impl FnOnce() -> FdtofStatus) -> FdtofStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic".into());
            FdtofStatus::Panic
        }
    }
}

fn peak_to_c(p: &TonePeak) -> FdtofTonePeak {
    FdtofTonePeak {
        depth_m: p.depth,
        amplitude: p.amplitude,
        peak_quality: p.peak_quality,
        status: match p.status {
            PeakStatus::Ok => FdtofPeakStatus::Ok,
            PeakStatus::NotConverged => FdtofPeakStatus::NotConverged,
            PeakStatus::Degenerate => FdtofPeakStatus::Degenerate,
            PeakStatus::ExposureToneOutOfBand => FdtofPeakStatus::ExposureToneOutOfBand,
        },
    }
}

/// Message for the most recent failure on this thread, or null if the last
/// call succeeded. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn fdtof_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => ptr::null(),
    })
}

/// Speed of light used throughout, m/s.
#[no_mangle]
pub extern "C" fn fdtof_speed_of_light() -> f64 {
    fdtof::SPEED_OF_LIGHT
}

// ---------------------------------------------------------------------------
// Scene points
// ---------------------------------------------------------------------------

/// Create a scene point with the given ambient level and no returns yet.
/// Free with `fdtof_scene_point_free`.
#[no_mangle]
pub extern "C" fn fdtof_scene_point_new(ambient: f64) -> *mut FdtofScenePoint {
    Box::into_raw(Box::new(FdtofScenePoint {
        paths: Vec::new(),
        ambient,
    }))
}

/// Append one return (amplitude, round-trip path length in meters).
///
/// # Safety
/// `point` must be a live handle from `fdtof_scene_point_new`.
#[no_mangle]
pub unsafe extern "C" fn fdtof_scene_point_add_path(
    point: *mut FdtofScenePoint,
    amplitude: f64,
    path_length_m: f64,
) -> FdtofStatus {
    let Some(point) = (unsafe { point.as_mut() }) else {
        return null_pointer("point");
    };
    guarded(|| match PathComponent::new(amplitude, path_length_m) {
        Ok(p) => {
            point.paths.push(p);
            FdtofStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// # Safety
/// `point` must be null or a live handle; the handle is consumed.
#[no_mangle]
pub unsafe extern "C" fn fdtof_scene_point_free(point: *mut FdtofScenePoint) {
    if !point.is_null() {
        drop(unsafe { Box::from_raw(point) });
    }
}

fn build_point(point: &FdtofScenePoint) -> Result<ScenePoint, Error> {
    ScenePoint::new(point.paths.clone(), point.ambient)
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Swept-frequency capture of `point` over `n` frequencies from `f_min_hz`
/// to `f_max_hz` inclusive. On success `*out` holds a new signal handle.
///
/// # Safety
/// `point` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_synth_fd_sweep(
    point: *const FdtofScenePoint,
    f_min_hz: f64,
    f_max_hz: f64,
    n: usize,
    out: *mut *mut FdtofSignal,
) -> FdtofStatus {
    let Some(point) = (unsafe { point.as_ref() }) else {
        return null_pointer("point");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = build_point(point).and_then(|p| {
            let sweep = FrequencySweep::new(f_min_hz, f_max_hz, n)?;
            Ok(signal_model::synth_fd_sweep(&p, &sweep))
        });
        match result {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(FdtofSignal { inner: sig })) };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Phase-correlation capture of `point` at `f_mod_hz` over the given
/// correlation shifts (seconds, strictly increasing).
///
/// # Safety
/// `point` must be a live handle, `taus` must point to `n_taus` doubles,
/// and `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_synth_phase_correlation(
    point: *const FdtofScenePoint,
    f_mod_hz: f64,
    taus: *const f64,
    n_taus: usize,
    out: *mut *mut FdtofSignal,
) -> FdtofStatus {
    let Some(point) = (unsafe { point.as_ref() }) else {
        return null_pointer("point");
    };
    if taus.is_null() {
        return null_pointer("taus");
    }
    if out.is_null() {
        return null_pointer("out");
    }
    let taus = unsafe { std::slice::from_raw_parts(taus, n_taus) };
    guarded(|| {
        let result = build_point(point)
            .and_then(|p| signal_model::synth_phase_correlation(&p, f_mod_hz, taus));
        match result {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(FdtofSignal { inner: sig })) };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Integrating-camera capture of `point`: swept frequencies with exposure
/// `exposure_s`.
///
/// # Safety
/// `point` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_synth_slow_sweep(
    point: *const FdtofScenePoint,
    f_min_hz: f64,
    f_max_hz: f64,
    n: usize,
    exposure_s: f64,
    out: *mut *mut FdtofSignal,
) -> FdtofStatus {
    let Some(point) = (unsafe { point.as_ref() }) else {
        return null_pointer("point");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = build_point(point).and_then(|p| {
            let sweep = FrequencySweep::new(f_min_hz, f_max_hz, n)?;
            signal_model::synth_slow_sweep(&p, &sweep, exposure_s)
        });
        match result {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(FdtofSignal { inner: sig })) };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

/// Number of samples in a signal; 0 for a null handle.
///
/// # Safety
/// `signal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdtof_signal_len(signal: *const FdtofSignal) -> usize {
    unsafe { signal.as_ref() }.map_or(0, |s| s.inner.len())
}

/// Copy the primal-domain coordinates into `buf` (capacity `cap` doubles).
/// Fails unless `cap` is at least the signal length.
///
/// # Safety
/// `signal` must be a live handle and `buf` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn fdtof_signal_coordinates(
    signal: *const FdtofSignal,
    buf: *mut f64,
    cap: usize,
) -> FdtofStatus {
    copy_channel(signal, buf, cap, |s| s.coordinates())
}

/// Copy the sample values into `buf` (capacity `cap` doubles).
///
/// # Safety
/// `signal` must be a live handle and `buf` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn fdtof_signal_samples(
    signal: *const FdtofSignal,
    buf: *mut f64,
    cap: usize,
) -> FdtofStatus {
    copy_channel(signal, buf, cap, |s| s.samples())
}

unsafe fn copy_channel(
    signal: *const FdtofSignal,
    buf: *mut f64,
    cap: usize,
    pick: impl Fn(&PrimalSignal) -> &[f64],
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if buf.is_null() {
        return null_pointer("buf");
    }
    let src = pick(&signal.inner);
    if cap < src.len() {
        set_error(format!("buffer holds {cap} doubles, need {}", src.len()));
        return FdtofStatus::InvalidArgument;
    }
    unsafe { std::slice::from_raw_parts_mut(buf, src.len()) }.copy_from_slice(src);
    FdtofStatus::Ok
}

/// Additive Gaussian noise at `snr_db` (pass INFINITY for a noiseless copy)
/// with the given seed; a new handle is returned in `*out`.
///
/// # Safety
/// `signal` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_signal_add_noise(
    signal: *const FdtofSignal,
    snr_db: f64,
    seed: u64,
    out: *mut *mut FdtofSignal,
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        match signal_model::add_noise(&signal.inner, &NoiseSpec::new(snr_db, seed)) {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(FdtofSignal { inner: sig })) };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `signal` must be null or a live handle; the handle is consumed.
#[no_mangle]
pub unsafe extern "C" fn fdtof_signal_free(signal: *mut FdtofSignal) {
    if !signal.is_null() {
        drop(unsafe { Box::from_raw(signal) });
    }
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// Interpolated-periodogram depth estimate of a swept-frequency signal.
///
/// # Safety
/// `signal` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_estimate_tone_interp(
    signal: *const FdtofSignal,
    out: *mut FdtofTonePeak,
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| match freq_domain::estimate_tone_interp(&signal.inner) {
        Ok(p) => {
            unsafe { *out = peak_to_c(&p) };
            FdtofStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Iteratively refined depth estimate of a swept-frequency signal. Pass a
/// negative `init_delay_s` to initialize from the periodogram; a positive
/// value seeds the iteration at that dual-domain delay.
///
/// # Safety
/// `signal` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_estimate_tone_qf(
    signal: *const FdtofSignal,
    init_delay_s: f64,
    out: *mut FdtofTonePeak,
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    let init = (init_delay_s >= 0.0).then_some(init_delay_s);
    guarded(|| match freq_domain::estimate_tone_qf(&signal.inner, init) {
        Ok(p) => {
            unsafe { *out = peak_to_c(&p) };
            FdtofStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Separate up to `max_k` returns as spectral peaks. `*out_n` receives the
/// number of peaks written to `out` (capacity `cap`).
///
/// # Safety
/// `signal` must be a live handle, `out` must point to `cap` structs, and
/// `out_n` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_separate_multipath(
    signal: *const FdtofSignal,
    max_k: usize,
    out: *mut FdtofTonePeak,
    cap: usize,
    out_n: *mut usize,
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    if out_n.is_null() {
        return null_pointer("out_n");
    }
    guarded(|| match freq_domain::separate_multipath(&signal.inner, max_k) {
        Ok(peaks) => {
            if cap < peaks.len() {
                set_error(format!("buffer holds {cap} peaks, need {}", peaks.len()));
                return FdtofStatus::InvalidArgument;
            }
            let dst = unsafe { std::slice::from_raw_parts_mut(out, peaks.len()) };
            for (d, p) in dst.iter_mut().zip(&peaks) {
                *d = peak_to_c(p);
            }
            unsafe { *out_n = peaks.len() };
            FdtofStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Depth estimate from an integrating-camera signal captured over the given
/// sweep with exposure `exposure_s`.
///
/// # Safety
/// `signal` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_estimate_depth_slow(
    signal: *const FdtofSignal,
    f_min_hz: f64,
    f_max_hz: f64,
    n: usize,
    exposure_s: f64,
    out: *mut FdtofTonePeak,
) -> FdtofStatus {
    let Some(signal) = (unsafe { signal.as_ref() }) else {
        return null_pointer("signal");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = FrequencySweep::new(f_min_hz, f_max_hz, n)
            .and_then(|sweep| SlowCaptureConfig::new(exposure_s, sweep))
            .and_then(|cfg| slow_tof::estimate_depth_slow(&signal.inner, &cfg));
        match result {
            Ok(p) => {
                unsafe { *out = peak_to_c(&p) };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Full phase-correlation pipeline for a scene point: synthesize four
/// buckets at `f_mod_hz`, add noise at `snr_db` (INFINITY for noiseless),
/// recover depth.
///
/// # Safety
/// `point` must be a live handle and `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fdtof_estimate_depth_phase(
    point: *const FdtofScenePoint,
    f_mod_hz: f64,
    snr_db: f64,
    seed: u64,
    out: *mut FdtofDepthEstimate,
) -> FdtofStatus {
    let Some(point) = (unsafe { point.as_ref() }) else {
        return null_pointer("point");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let result = build_point(point).and_then(|p| {
            phase_tof::estimate_depth_phase(&p, f_mod_hz, &NoiseSpec::new(snr_db, seed))
        });
        match result {
            Ok(d) => {
                unsafe {
                    *out = FdtofDepthEstimate {
                        depth_m: d.depth,
                        amplitude: d.amplitude,
                        confidence: d.confidence,
                    }
                };
                FdtofStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Scalars
// ---------------------------------------------------------------------------

/// Depth beyond which single-frequency phase wraps, `c / (2 f)`. Returns NaN
/// for a non-positive frequency.
#[no_mangle]
pub extern "C" fn fdtof_ambiguity_distance(f_mod_hz: f64) -> f64 {
    if !(f_mod_hz.is_finite() && f_mod_hz > 0.0) {
        return f64::NAN;
    }
    phase_tof::ambiguity_distance(f_mod_hz)
}

/// Minimum resolvable path-length separation for a sweep, `1.2 c / Δf`.
/// Returns NaN for an invalid sweep.
#[no_mangle]
pub extern "C" fn fdtof_axial_resolution(f_min_hz: f64, f_max_hz: f64) -> f64 {
    match FrequencySweep::new(f_min_hz, f_max_hz, 3) {
        Ok(sweep) => freq_domain::axial_resolution(&sweep),
        Err(_) => f64::NAN,
    }
}

/// ABI version of this library.
#[no_mangle]
pub extern "C" fn fdtof_abi_version() -> c_int {
    1
}
