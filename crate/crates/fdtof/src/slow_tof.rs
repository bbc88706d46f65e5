//! Depth recovery from an ordinary integrating camera swept over modulation
//! frequencies.
//!
//! A camera with exposure `t_E` records, per swept frequency `f`,
//!
//! ```text
//! I(f) = α/(2πf) [sin(2πf(t_E + z/c)) − sin(2πf z/c)] + β t_E
//! ```
//!
//! which is the sum of two tones at dual-domain delays `z/c` and
//! `z/c + t_E`, under a `1/f` amplitude envelope. Recovery proceeds by:
//!
//! 1. multiplying each sample by its frequency, which turns both components
//!    into constant-amplitude tones and the DC term into a term linear in
//!    `f`;
//! 2. removing that linear trend by least squares;
//! 3. locating spectral peaks within a configurable delay band
//!    `[0, κ_max]`;
//! 4. reporting depth from the **lower**-delay tone, which is always `z/c`
//!    because `t_E > 0`.
//!
//! When both tones land inside the band, their separation is checked against
//! the configured exposure time; a mismatch means the exposure varied during
//! the sweep and the estimate fails with [`Error::InconsistentExposure`].
//! For realistic exposures (milliseconds against nanosecond path delays) the
//! `t_E` tone falls far outside any usable band; the estimate then proceeds
//! from the lone `z/c` tone and reports
//! [`PeakStatus::ExposureToneOutOfBand`].

use crate::error::{Error, Result};
use crate::freq_domain::{
    analyze, parabolic_log_refine, PeakStatus, SpectralWindow, TonePeak, MIN_PRIMAL_CYCLES,
    PEAK_PROMINENCE_FACTOR,
};
use crate::signal_model::{DomainKind, FrequencySweep, PrimalSignal};
use crate::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default upper edge of the dual-domain search band, seconds of delay.
/// 200 ns covers round-trip paths out to 60 m while staying far below the
/// exposure-time tone of any camera-scale exposure.
pub const DEFAULT_KAPPA_MAX: f64 = 200e-9;

/// Relative tolerance for the exposure-consistency check on the recovered
/// tone pair.
pub const EXPOSURE_TONE_TOLERANCE: f64 = 0.01;

/// Integrating-camera capture configuration: one exposure time held constant
/// across the whole sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlowCaptureConfig")]
pub struct SlowCaptureConfig {
    /// Exposure time `t_E` in seconds, > 0.
    #[serde(rename = "exposure_s")]
    pub exposure: f64,
    pub sweep: FrequencySweep,
}

#[derive(Deserialize)]
struct RawSlowCaptureConfig {
    #[serde(rename = "exposure_s")]
    exposure: f64,
    sweep: FrequencySweep,
}

impl TryFrom<RawSlowCaptureConfig> for SlowCaptureConfig {
    type Error = Error;
    fn try_from(raw: RawSlowCaptureConfig) -> Result<Self> {
        SlowCaptureConfig::new(raw.exposure, raw.sweep)
    }
}

impl SlowCaptureConfig {
    pub fn new(exposure: f64, sweep: FrequencySweep) -> Result<Self> {
        if !exposure.is_finite() || exposure <= 0.0 {
            return Err(Error::invalid(format!(
                "exposure must be finite and > 0, got {exposure}"
            )));
        }
        Ok(Self { exposure, sweep })
    }
}

/// Tunables for [`estimate_depth_slow_with`].
#[derive(Debug, Clone, Copy)]
pub struct SlowEstimatorOptions {
    /// Upper edge of the dual-domain search band, seconds.
    pub kappa_max: f64,
    /// Zero-padding factor for the internal spectrum.
    pub zero_pad_factor: usize,
    /// Peak prominence threshold as a multiple of the spectral median.
    pub prominence_factor: f64,
}

impl Default for SlowEstimatorOptions {
    fn default() -> Self {
        Self {
            kappa_max: DEFAULT_KAPPA_MAX,
            zero_pad_factor: 8,
            prominence_factor: PEAK_PROMINENCE_FACTOR,
        }
    }
}

/// Depth estimate from an integrating-camera sweep with default options.
pub fn estimate_depth_slow(signal: &PrimalSignal, cfg: &SlowCaptureConfig) -> Result<TonePeak> {
    estimate_depth_slow_with(signal, cfg, &SlowEstimatorOptions::default())
}

/// Depth estimate from an integrating-camera sweep.
///
/// See the module docs for the recovery pipeline. A record with no usable
/// in-band tone (including the `z = 0` case, whose only tone sits at `t_E`)
/// reports depth 0 with [`PeakStatus::Degenerate`].
pub fn estimate_depth_slow_with(
    signal: &PrimalSignal,
    cfg: &SlowCaptureConfig,
    opts: &SlowEstimatorOptions,
) -> Result<TonePeak> {
    if signal.domain() != DomainKind::ModulationFrequency {
        return Err(Error::invalid(
            "integrating-camera estimation requires a modulation-frequency signal",
        ));
    }
    check_grid_matches(signal, &cfg.sweep)?;
    if !(opts.kappa_max.is_finite() && opts.kappa_max > 0.0) {
        return Err(Error::invalid("kappa_max must be finite and > 0"));
    }

    // Undo the 1/f envelope. The DC term beta*t_E becomes linear in f and is
    // removed exactly by the detrend.
    let whitened = prewhiten_detrend(signal)?;

    let a = analyze(&whitened, SpectralWindow::Hann, opts.zero_pad_factor)?;
    let mag = a.spectrum.magnitude();
    let kappa = a.spectrum.kappa();
    let median = a.spectrum.median_magnitude();
    // The sidelobe floor is referenced to the full-spectrum maximum: the
    // exposure-time tone (aliased or not) has the same amplitude scale as
    // the path tone, so it anchors the detection scale even when it lies
    // outside the search band.
    let global_max = mag.iter().cloned().fold(0.0, f64::max);
    let threshold = (opts.prominence_factor * median)
        .max(SpectralWindow::Hann.peak_floor_fraction() * global_max);
    let min_kappa = MIN_PRIMAL_CYCLES / a.bandwidth;
    let band_max = opts.kappa_max.min(kappa[kappa.len() - 1]);

    // In-band local maxima above the prominence threshold, ascending kappa.
    let mut peaks: Vec<usize> = Vec::new();
    for k in 1..mag.len() - 1 {
        if kappa[k] >= min_kappa
            && kappa[k] <= band_max
            && mag[k] > mag[k - 1]
            && mag[k] >= mag[k + 1]
            && mag[k] >= threshold
        {
            peaks.push(k);
        }
    }

    if peaks.is_empty() {
        return Ok(TonePeak {
            depth: 0.0,
            amplitude: 0.0,
            peak_quality: 1.0,
            status: PeakStatus::Degenerate,
        });
    }

    let refine = |k: usize| -> (f64, f64) {
        let (delta, ln_peak) = parabolic_log_refine(mag, k);
        let kappa_hat = (k as f64 + delta) * a.kappa_step;
        // Tone amplitude in the whitened record is alpha/(2*pi); report the
        // path amplitude alpha.
        let alpha = 2.0 * PI * 2.0 * ln_peak.exp() / a.window_sum;
        (kappa_hat, alpha)
    };

    let t_e = cfg.exposure;
    let tol = EXPOSURE_TONE_TOLERANCE * t_e;
    let (kappa_lo, alpha) = refine(peaks[0]);
    let quality = if median > 0.0 {
        (mag[peaks[0]] / median).max(1.0)
    } else {
        1.0
    };

    // A lone tone sitting at t_E itself is the z = 0 signature.
    if peaks.len() == 1 && (kappa_lo - t_e).abs() <= tol {
        return Ok(TonePeak {
            depth: 0.0,
            amplitude: alpha,
            peak_quality: quality,
            status: PeakStatus::Degenerate,
        });
    }

    let expected_companion = kappa_lo + t_e;
    let status = if expected_companion <= band_max {
        // The exposure tone should be visible: verify the pair separation.
        let companion = peaks[1..]
            .iter()
            .map(|&k| refine(k).0)
            .find(|&kap| (kap - expected_companion).abs() <= tol);
        match companion {
            Some(_) => PeakStatus::Ok,
            None => {
                let found: Vec<f64> = peaks[1..].iter().map(|&k| refine(k).0).collect();
                return Err(Error::InconsistentExposure(format!(
                    "expected a companion tone at {expected_companion:.4e} s \
                     (lower tone {kappa_lo:.4e} s + exposure {t_e:.4e} s); found {found:?}"
                )));
            }
        }
    } else {
        PeakStatus::ExposureToneOutOfBand
    };

    Ok(TonePeak {
        depth: kappa_lo * SPEED_OF_LIGHT / 2.0,
        amplitude: alpha,
        peak_quality: quality,
        status,
    })
}

/// Fit of `log(envelope)` against `log(f)` for a swept record; returns the
/// slope.
///
/// The envelope is sampled at the local maxima of the rectified (demeaned)
/// signal. An integrating-camera record decays as `1/f` (slope ≈ −1); a fast
/// sensor's record has a flat envelope (slope ≈ 0). Needs at least three
/// envelope maxima.
pub fn verify_amplitude_decay(signal: &PrimalSignal) -> Result<f64> {
    if signal.domain() != DomainKind::ModulationFrequency {
        return Err(Error::invalid(
            "amplitude-decay fit requires a modulation-frequency signal",
        ));
    }
    let mean = signal.mean();
    let rect: Vec<f64> = signal.samples().iter().map(|s| (s - mean).abs()).collect();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for i in 1..rect.len() - 1 {
        if rect[i] > rect[i - 1] && rect[i] >= rect[i + 1] && rect[i] > 0.0 {
            points.push((signal.coordinates()[i].ln(), rect[i].ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientCycles(format!(
            "found {} envelope maxima; need at least 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InsufficientCycles(
            "envelope maxima span no frequency range".into(),
        ));
    }
    Ok((n * sxy - sx * sy) / denom)
}

fn check_grid_matches(signal: &PrimalSignal, sweep: &FrequencySweep) -> Result<()> {
    let coords = signal.coordinates();
    if coords.len() != sweep.n_samples {
        return Err(Error::invalid(format!(
            "signal has {} samples but the sweep specifies {}",
            coords.len(),
            sweep.n_samples
        )));
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    if rel(coords[0], sweep.f_min) > 1e-9 || rel(coords[coords.len() - 1], sweep.f_max) > 1e-9 {
        return Err(Error::invalid(
            "signal frequency grid does not match the configured sweep",
        ));
    }
    Ok(())
}

/// Multiply each sample by its frequency coordinate and remove the best-fit
/// line in `f`.
fn prewhiten_detrend(signal: &PrimalSignal) -> Result<PrimalSignal> {
    let coords = signal.coordinates();
    let w: Vec<f64> = signal
        .samples()
        .iter()
        .zip(coords)
        .map(|(&s, &f)| s * f)
        .collect();
    let n = w.len() as f64;
    let sx: f64 = coords.iter().sum();
    let sy: f64 = w.iter().sum();
    let sxx: f64 = coords.iter().map(|x| x * x).sum();
    let sxy: f64 = coords.iter().zip(&w).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let detrended: Vec<f64> = w
        .iter()
        .zip(coords)
        .map(|(&y, &x)| y - intercept - slope * x)
        .collect();
    signal.with_samples(detrended)
}
