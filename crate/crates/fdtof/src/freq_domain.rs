//! Depth recovery from swept-frequency signals.
//!
//! A return at path length `z` shows up in the swept-frequency record as a
//! sinusoid of "frequency" `z/c` cycles per Hz, so depth estimation reduces
//! to single-tone frequency estimation. The dual-domain coordinate `κ` is
//! expressed in seconds of delay: a pure tone from path length `z` peaks at
//! `κ = z/c`, and the reported depth is `κ · c / 2`.
//!
//! Three estimation layers build on the same spectrum machinery:
//!
//! * [`periodogram`]: windowed, zero-padded magnitude spectrum over `κ`.
//! * [`estimate_tone_interp`]: spectral argmax refined by three-point
//!   parabolic interpolation on the log magnitude.
//! * [`estimate_tone_qf`]: iterative single-tone refinement. A resonator
//!   stage filters the record at the current frequency estimate and
//!   re-estimates it by regression, repeated to a fixed point; a
//!   Gauss-Newton stage then polishes the frequency on the full sinusoid
//!   least-squares objective, which that fixed point approximates. On clean
//!   input it is substantially tighter than the interpolated periodogram.
//!
//! Multipath returns appear as separate spectral peaks; see
//! [`separate_multipath`]. The minimum resolvable path-length separation for
//! a sweep of bandwidth `Δf` is `Δz ≈ 1.2 c / Δf` ([`axial_resolution`]),
//! the FWHM of the boxcar sweep's transform.
//!
//! All estimators remove the DC component first, so results are invariant to
//! the ambient level. Every estimator enforces the *cycle guard*: the sweep
//! must contain at least one full cycle of the tone
//! (`bandwidth · z / c ≥ 1`), otherwise frequency content is not observable
//! and the call fails with [`Error::InsufficientBandwidth`].

use crate::error::{Error, Result};
use crate::signal_model::{DomainKind, FrequencySweep, PrimalSignal};
use crate::SPEED_OF_LIGHT;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Zero-padding factor used by the tone estimators' internal spectra.
pub const DEFAULT_ZERO_PAD: usize = 8;

/// Minimum number of primal-domain cycles required before tone estimation.
pub const MIN_PRIMAL_CYCLES: f64 = 1.0;

/// Default peak prominence threshold for multipath separation, as a multiple
/// of the spectral median magnitude.
pub const PEAK_PROMINENCE_FACTOR: f64 = 6.0;

/// Iteration cap for the resonator refinement loop.
pub const QF_MAX_ITERATIONS: usize = 20;

/// Iteration cap for the least-squares polish stage.
pub const QF_POLISH_MAX_ITERATIONS: usize = 10;

/// Convergence threshold for successive frequency iterates, as a fraction of
/// the unpadded spectral bin width.
pub const QF_TOLERANCE: f64 = 1e-6;

/// Analysis window applied before the transform.
///
/// `Hann` suppresses the boxcar sidelobes and is the default for peak
/// finding; `Rectangular` preserves the raw sinc response that defines the
/// axial-resolution bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralWindow {
    Rectangular,
    Hann,
}

impl SpectralWindow {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            SpectralWindow::Rectangular => vec![1.0; n],
            SpectralWindow::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos()))
                .collect(),
        }
    }

    /// Detection floor for peak finding, as a fraction of the global
    /// spectral maximum: just above the window's peak sidelobe (Hann
    /// ~-31 dB, rectangular ~-13 dB), so sidelobes of a strong return are
    /// never reported as separate peaks.
    pub fn peak_floor_fraction(self) -> f64 {
        match self {
            SpectralWindow::Rectangular => 0.30,
            SpectralWindow::Hann => 0.05,
        }
    }
}

/// Magnitude spectrum over the dual-domain delay coordinate `κ` (seconds).
#[derive(Debug, Clone)]
pub struct Spectrum {
    kappa: Vec<f64>,
    magnitude: Vec<f64>,
}

impl Spectrum {
    /// Dual-domain coordinates, non-negative and strictly increasing.
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Median of the magnitude vector.
    pub fn median_magnitude(&self) -> f64 {
        let mut sorted = self.magnitude.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }
}

/// One recovered return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TonePeak {
    /// Recovered object depth in meters (`κ · c / 2`).
    pub depth: f64,
    /// Recovered path amplitude, calibrated so a return synthesized with
    /// amplitude `α` reports approximately `α`.
    pub amplitude: f64,
    /// Ratio of the peak magnitude to the spectral median; `≥ 1` for any
    /// reported peak, larger is cleaner.
    pub peak_quality: f64,
    pub status: PeakStatus,
}

/// Quality/flag channel accompanying a [`TonePeak`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakStatus {
    /// Estimate completed normally.
    Ok,
    /// The iterative refinement hit its iteration cap; the best iterate is
    /// reported but should be treated as degraded.
    NotConverged,
    /// No usable tone was found; depth/amplitude are placeholders.
    Degenerate,
    /// Integrating-camera estimate whose exposure-time companion tone lies
    /// outside the searchable band, so the exposure consistency check could
    /// not be performed.
    ExposureToneOutOfBand,
}

/// Everything the estimators need to share about one analyzed record.
pub(crate) struct SpectralAnalysis {
    pub spectrum: Spectrum,
    /// Primal-domain sample spacing, Hz.
    pub delta_f: f64,
    /// Swept bandwidth (last coordinate minus first), Hz.
    pub bandwidth: f64,
    /// κ spacing of the (zero-padded) spectral grid, seconds.
    pub kappa_step: f64,
    /// Sum of the window coefficients, for amplitude calibration.
    pub window_sum: f64,
}

/// Verify uniform spacing and return it.
fn uniform_spacing(signal: &PrimalSignal) -> Result<f64> {
    let coords = signal.coordinates();
    let n = coords.len();
    let mean = (coords[n - 1] - coords[0]) / (n - 1) as f64;
    for w in coords.windows(2) {
        let d = w[1] - w[0];
        if (d - mean).abs() > 1e-6 * mean {
            return Err(Error::invalid(format!(
                "coordinates must be uniformly spaced: step {d} deviates from mean {mean}"
            )));
        }
    }
    Ok(mean)
}

pub(crate) fn analyze(
    signal: &PrimalSignal,
    window: SpectralWindow,
    zero_pad_factor: usize,
) -> Result<SpectralAnalysis> {
    if signal.domain() != DomainKind::ModulationFrequency {
        return Err(Error::invalid(
            "spectral analysis requires a modulation-frequency signal",
        ));
    }
    if signal.len() < 8 {
        return Err(Error::invalid(format!(
            "spectral analysis needs at least 8 samples, got {}",
            signal.len()
        )));
    }
    if zero_pad_factor < 1 {
        return Err(Error::invalid("zero_pad_factor must be >= 1"));
    }
    let delta_f = uniform_spacing(signal)?;
    let n = signal.len();
    let n_fft = n * zero_pad_factor;

    let mean = signal.mean();
    let win = window.coefficients(n);
    let window_sum: f64 = win.iter().sum();

    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n_fft);
    for (s, w) in signal.samples().iter().zip(&win) {
        buf.push(Complex::new((s - mean) * w, 0.0));
    }
    buf.resize(n_fft, Complex::new(0.0, 0.0));

    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);

    let half = n_fft / 2;
    let kappa_step = 1.0 / (n_fft as f64 * delta_f);
    let kappa: Vec<f64> = (0..=half).map(|k| k as f64 * kappa_step).collect();
    let magnitude: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();

    Ok(SpectralAnalysis {
        spectrum: Spectrum { kappa, magnitude },
        delta_f,
        bandwidth: signal.coordinates()[n - 1] - signal.coordinates()[0],
        kappa_step,
        window_sum,
    })
}

/// Magnitude spectrum of a swept-frequency record with the default Hann
/// window.
///
/// The DC component (sample mean) is removed before the transform, so a
/// constant signal produces an all-zero spectrum. Zero padding refines the
/// spectral grid only; it adds no resolution.
pub fn periodogram(signal: &PrimalSignal, zero_pad_factor: usize) -> Result<Spectrum> {
    periodogram_with(signal, SpectralWindow::Hann, zero_pad_factor)
}

/// [`periodogram`] with an explicit window choice.
pub fn periodogram_with(
    signal: &PrimalSignal,
    window: SpectralWindow,
    zero_pad_factor: usize,
) -> Result<Spectrum> {
    Ok(analyze(signal, window, zero_pad_factor)?.spectrum)
}

/// Index of the largest magnitude over `1..len-1` (the DC bin and the
/// Nyquist edge are excluded).
fn argmax_interior(magnitude: &[f64]) -> usize {
    let mut best = 1;
    let mut best_val = f64::NEG_INFINITY;
    for (k, &m) in magnitude.iter().enumerate().skip(1).take(magnitude.len() - 2) {
        if m > best_val {
            best_val = m;
            best = k;
        }
    }
    best
}

/// Three-point parabolic interpolation on the log magnitude around bin `k`.
/// Returns the sub-bin offset in `[-0.5, 0.5]` and the interpolated log peak
/// height.
pub(crate) fn parabolic_log_refine(magnitude: &[f64], k: usize) -> (f64, f64) {
    let c = magnitude[k];
    if k == 0 || k + 1 >= magnitude.len() {
        return (0.0, c.max(f64::MIN_POSITIVE).ln());
    }
    let (l, r) = (magnitude[k - 1], magnitude[k + 1]);
    if l <= 0.0 || c <= 0.0 || r <= 0.0 {
        return (0.0, c.max(f64::MIN_POSITIVE).ln());
    }
    let (ll, lc, lr) = (l.ln(), c.ln(), r.ln());
    let denom = ll - 2.0 * lc + lr;
    if denom.abs() < 1e-300 {
        return (0.0, lc);
    }
    let delta = 0.5 * (ll - lr) / denom;
    let peak = lc - 0.25 * (ll - lr) * delta;
    (delta.clamp(-0.5, 0.5), peak)
}

fn cycle_guard(bandwidth: f64, kappa: f64) -> Result<()> {
    let cycles = bandwidth * kappa;
    if cycles < MIN_PRIMAL_CYCLES {
        return Err(Error::InsufficientBandwidth(format!(
            "sweep contains {cycles:.3} cycles of the tone; at least {MIN_PRIMAL_CYCLES} required \
             (bandwidth {bandwidth:.3e} Hz, tone delay {kappa:.3e} s)"
        )));
    }
    Ok(())
}

/// Coarse pick shared by the estimators: interior argmax, cycle guard,
/// parabolic refinement. Returns `(κ̂, tone amplitude, peak quality)`.
fn coarse_tone(a: &SpectralAnalysis) -> Result<(f64, f64, f64)> {
    let mag = a.spectrum.magnitude();
    let k = argmax_interior(mag);
    cycle_guard(a.bandwidth, a.spectrum.kappa()[k])?;
    let (delta, ln_peak) = parabolic_log_refine(mag, k);
    let kappa = (k as f64 + delta) * a.kappa_step;
    let tone_amp = 2.0 * ln_peak.exp() / a.window_sum;
    let median = a.spectrum.median_magnitude();
    let quality = if median > 0.0 { mag[k] / median } else { 1.0 };
    Ok((kappa, tone_amp, quality.max(1.0)))
}

/// Single-tone depth estimate from the interpolated periodogram.
///
/// The spectral argmax is refined by three-point parabolic interpolation on
/// the log magnitude of a Hann-windowed, zero-padded spectrum.
pub fn estimate_tone_interp(signal: &PrimalSignal) -> Result<TonePeak> {
    let a = analyze(signal, SpectralWindow::Hann, DEFAULT_ZERO_PAD)?;
    let (kappa, tone_amp, quality) = coarse_tone(&a)?;
    Ok(TonePeak {
        depth: kappa * SPEED_OF_LIGHT / 2.0,
        amplitude: 2.0 * tone_amp,
        peak_quality: quality,
        status: PeakStatus::Ok,
    })
}

/// Iterative single-tone refinement.
///
/// Starting from `init` (a dual-domain delay in seconds) or from the
/// interpolated-periodogram estimate, two refinement stages run in
/// sequence:
///
/// 1. **Resonator re-estimation** ([`qf_resonator_stage`]): filter the
///    demeaned record through the two-pole resonator
///    `ζ_t = y_t + a ζ_{t−1} − ζ_{t−2}` with `a = 2 cos ω`, re-estimate
///    `a ← a + Σ_t ζ_{t−1} y_t / Σ_t ζ_{t−1}²`, and repeat to a fixed
///    point.
/// 2. **Least-squares polish** ([`ls_polish_stage`]): Gauss-Newton steps on
///    the full objective `min ‖y − A cos(ωt) − B sin(ωt) − C‖²`, the
///    estimator whose efficiency the resonator stage approximates. On
///    noiseless input this removes the resonator stage's small
///    finite-sample bias entirely, so initializing exactly at the true tone
///    is a fixed point within one step.
///
/// Both stages stop when successive frequency iterates differ by less than
/// [`QF_TOLERANCE`] of the unpadded bin width. If the polish stage exhausts
/// [`QF_POLISH_MAX_ITERATIONS`], the best iterate is returned with
/// [`PeakStatus::NotConverged`].
///
/// An explicit `init` is taken as already on-tone and seeds the polish
/// stage directly, so initializing at the true tone converges within a
/// couple of iterations; without `init` the resonator stage first pulls the
/// periodogram pick onto the tone.
pub fn estimate_tone_qf(signal: &PrimalSignal, init: Option<f64>) -> Result<TonePeak> {
    let a = analyze(signal, SpectralWindow::Hann, DEFAULT_ZERO_PAD)?;
    let (kappa_coarse, _, quality) = coarse_tone(&a)?;

    let nyquist_kappa = 1.0 / (2.0 * a.delta_f);
    let kappa_init = match init {
        Some(k) => {
            if !k.is_finite() || k <= 0.0 || k >= nyquist_kappa {
                return Err(Error::invalid(format!(
                    "initial tone delay must lie in (0, {nyquist_kappa:.3e}) s, got {k}"
                )));
            }
            k
        }
        None => kappa_coarse,
    };

    let n = signal.len();
    let mean = signal.mean();
    let y: Vec<f64> = signal.samples().iter().map(|s| s - mean).collect();

    // Per-sample angular frequency of the tone.
    let omega0 = (TAU * kappa_init * a.delta_f).clamp(1e-9, PI - 1e-9);
    let tol = QF_TOLERANCE * TAU / n as f64;

    let omega = if init.is_some() {
        omega0
    } else {
        qf_resonator_stage(&y, omega0, tol)
    };
    let (omega, converged) = ls_polish_stage(&y, omega, tol);

    let kappa = omega / (TAU * a.delta_f);
    let (amp_cos, amp_sin, _) = sinusoid_ls(&y, omega);
    Ok(TonePeak {
        depth: kappa * SPEED_OF_LIGHT / 2.0,
        amplitude: 2.0 * amp_cos.hypot(amp_sin),
        peak_quality: quality,
        status: if converged {
            PeakStatus::Ok
        } else {
            PeakStatus::NotConverged
        },
    })
}

/// Resonator-filter re-estimation loop; returns the fixed-point frequency
/// (or the last iterate after [`QF_MAX_ITERATIONS`]).
fn qf_resonator_stage(y: &[f64], omega0: f64, tol: f64) -> f64 {
    let mut omega = omega0;
    for _ in 0..QF_MAX_ITERATIONS {
        let coeff = 2.0 * omega.cos();
        let mut z1 = 0.0_f64; // ζ_{t−1}
        let mut z2 = 0.0_f64; // ζ_{t−2}
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for (t, &yt) in y.iter().enumerate() {
            if t >= 2 {
                num += z1 * yt;
                den += z1 * z1;
            }
            let zt = yt + coeff * z1 - z2;
            z2 = z1;
            z1 = zt;
        }
        if den <= 0.0 {
            break;
        }
        let coeff_new = (coeff + num / den).clamp(-2.0 + 1e-12, 2.0 - 1e-12);
        let omega_new = (coeff_new / 2.0).acos();
        let step = (omega_new - omega).abs();
        omega = omega_new;
        if step < tol {
            break;
        }
    }
    omega
}

/// Gauss-Newton refinement of `ω` on `min ‖y − A cos(ωt) − B sin(ωt) − C‖²`.
///
/// Each iteration solves the linear subproblem for `(A, B, C)`, projects the
/// frequency sensitivity `t·(B cos ωt − A sin ωt)` onto the orthogonal
/// complement of the linear model space (variable projection; without it
/// the step badly undershoots), and takes the resulting Newton step in `ω`.
/// Returns the refined frequency and whether the step size dropped below
/// `tol` within the iteration budget.
fn ls_polish_stage(y: &[f64], omega0: f64, tol: f64) -> (f64, bool) {
    let n = y.len();
    let max_step = PI / n as f64; // never jump more than half an unpadded bin
    let mut omega = omega0;
    for _ in 0..QF_POLISH_MAX_ITERATIONS {
        let (amp_cos, amp_sin, offset) = sinusoid_ls(y, omega);
        let slope: Vec<f64> = (0..n)
            .map(|t| {
                let tf = t as f64;
                let (sin, cos) = (omega * tf).sin_cos();
                tf * (amp_sin * cos - amp_cos * sin)
            })
            .collect();
        let (sc, ss, s1) = sinusoid_ls(&slope, omega);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for (t, (&yt, &sl)) in y.iter().zip(&slope).enumerate() {
            let (sin, cos) = (omega * t as f64).sin_cos();
            let residual = yt - amp_cos * cos - amp_sin * sin - offset;
            let slope_perp = sl - sc * cos - ss * sin - s1;
            num += slope_perp * residual;
            den += slope_perp * slope_perp;
        }
        if den <= 0.0 {
            return (omega, false);
        }
        let step = (num / den).clamp(-max_step, max_step);
        omega = (omega + step).clamp(1e-9, PI - 1e-9);
        if step.abs() < tol {
            return (omega, true);
        }
    }
    (omega, false)
}

/// Least-squares fit of `y_t ≈ a cos(ω t) + b sin(ω t) + c`; returns
/// `(a, b, c)`.
fn sinusoid_ls(y: &[f64], omega: f64) -> (f64, f64, f64) {
    let n = y.len();
    let (mut scc, mut scs, mut sss) = (0.0, 0.0, 0.0);
    let (mut sc, mut ss) = (0.0, 0.0);
    let (mut bc, mut bs, mut b1) = (0.0, 0.0, 0.0);
    for (t, &yt) in y.iter().enumerate() {
        let (sin, cos) = (omega * t as f64).sin_cos();
        scc += cos * cos;
        scs += cos * sin;
        sss += sin * sin;
        sc += cos;
        ss += sin;
        bc += yt * cos;
        bs += yt * sin;
        b1 += yt;
    }
    let m = [
        [scc, scs, sc],
        [scs, sss, ss],
        [sc, ss, n as f64],
    ];
    let b = [bc, bs, b1];
    match solve3(m, b) {
        Some(x) => (x[0], x[1], x[2]),
        None => (0.0, 0.0, 0.0),
    }
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = m[col];
        for row in col + 1..3 {
            let f = m[row][col] / pivot_row[col];
            for (entry, &p) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *entry -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Separate up to `max_k` returns as distinct spectral peaks, using the
/// default Hann window and prominence threshold.
///
/// Peaks are local maxima exceeding [`PEAK_PROMINENCE_FACTOR`] times the
/// spectral median *and* the window's sidelobe floor
/// ([`SpectralWindow::peak_floor_fraction`] of the global maximum), each
/// refined by parabolic interpolation, sorted ascending by depth. The
/// sidelobe floor bounds the detectable dynamic range: a return weaker than
/// ~5% of the strongest (Hann) is indistinguishable from window leakage.
/// Returns closer together than the axial resolution of the sweep merge
/// into a single peak. An empty result means no peak cleared the threshold.
pub fn separate_multipath(signal: &PrimalSignal, max_k: usize) -> Result<Vec<TonePeak>> {
    separate_multipath_with(
        signal,
        max_k,
        SpectralWindow::Hann,
        PEAK_PROMINENCE_FACTOR,
        DEFAULT_ZERO_PAD,
    )
}

/// [`separate_multipath`] with explicit window, prominence factor, and zero
/// padding.
pub fn separate_multipath_with(
    signal: &PrimalSignal,
    max_k: usize,
    window: SpectralWindow,
    prominence_factor: f64,
    zero_pad_factor: usize,
) -> Result<Vec<TonePeak>> {
    if max_k < 1 {
        return Err(Error::invalid("max_k must be >= 1"));
    }
    let a = analyze(signal, window, zero_pad_factor)?;
    let mag = a.spectrum.magnitude();
    let kappa = a.spectrum.kappa();
    let median = a.spectrum.median_magnitude();
    let global_max = mag.iter().cloned().fold(0.0, f64::max);
    let threshold = (prominence_factor * median).max(window.peak_floor_fraction() * global_max);
    let min_kappa = MIN_PRIMAL_CYCLES / a.bandwidth;

    let mut candidates: Vec<usize> = Vec::new();
    for k in 1..mag.len() - 1 {
        if kappa[k] >= min_kappa && mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] >= threshold
        {
            candidates.push(k);
        }
    }
    candidates.sort_by(|&i, &j| mag[j].total_cmp(&mag[i]));
    candidates.truncate(max_k);

    let mut peaks: Vec<TonePeak> = candidates
        .into_iter()
        .map(|k| {
            let (delta, ln_peak) = parabolic_log_refine(mag, k);
            let kappa_hat = (k as f64 + delta) * a.kappa_step;
            let tone_amp = 2.0 * ln_peak.exp() / a.window_sum;
            TonePeak {
                depth: kappa_hat * SPEED_OF_LIGHT / 2.0,
                amplitude: 2.0 * tone_amp,
                peak_quality: if median > 0.0 {
                    (mag[k] / median).max(1.0)
                } else {
                    1.0
                },
                status: PeakStatus::Ok,
            }
        })
        .collect();
    peaks.sort_by(|p, q| p.depth.total_cmp(&q.depth));
    Ok(peaks)
}

/// Minimum path-length separation at which two returns remain resolvable:
/// `Δz ≈ 1.2 c / Δf`, the FWHM of the boxcar sweep's sinc response.
pub fn axial_resolution(sweep: &FrequencySweep) -> f64 {
    1.2 * SPEED_OF_LIGHT / sweep.bandwidth()
}
