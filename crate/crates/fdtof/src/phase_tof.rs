//! Conventional phase-correlation depth recovery: four-bucket sampling,
//! phase-to-depth conversion, wrapping, and multipath phasor arithmetic.
//!
//! The four-bucket scheme samples the correlation waveform at shifts
//! `τ·2πf = 0, π/2, π, 3π/2` and recovers
//!
//! ```text
//! phase     = atan2(c4 − c2, c1 − c3)
//! amplitude = ½ √((c4 − c2)² + (c1 − c3)²)
//! ```
//!
//! which inverts the forward model exactly: a single return of amplitude `α`
//! comes back as `(α/2, φ)`. Depth follows from `z = c φ / (2π f)` and
//! `d = z/2`, valid only below the ambiguity distance `c / (2f)`; beyond it
//! the phase wraps and the reported depth is the true depth modulo that
//! distance. A single-frequency measurement cannot detect wrapping on its
//! own, so [`DepthEstimate::wrapped`] is only ever set by callers that know
//! ground truth.

use crate::error::{Error, Result};
use crate::signal_model::{add_noise, synth_phase_correlation, NoiseSpec, ScenePoint};
use crate::SPEED_OF_LIGHT;
use std::f64::consts::TAU;

/// Reference amplitude at which confidence saturates to 1. A unit-amplitude
/// return recovers amplitude 0.5, so this maps `α = 1` to full confidence.
pub const DEFAULT_CONFIDENCE_REFERENCE: f64 = 0.5;

/// Amplitude and phase of a recovered correlation waveform, `α e^{jφ}`.
///
/// Phase is canonical in `[0, 2π)`. A degenerate (zero-AC) measurement is
/// represented as amplitude 0 with phase 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    amplitude: f64,
    phase: f64,
}

impl Phasor {
    /// Build a phasor, canonicalizing the phase into `[0, 2π)`.
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::invalid(format!(
                "phasor amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phasor phase must be finite"));
        }
        Ok(Self {
            amplitude,
            phase: canonical_phase(phase),
        })
    }

    /// Phasor from rectangular components.
    pub fn from_complex(re: f64, im: f64) -> Self {
        let amplitude = re.hypot(im);
        let phase = if amplitude == 0.0 {
            0.0
        } else {
            canonical_phase(im.atan2(re))
        };
        Self { amplitude, phase }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Phase in `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// True when the measurement carried no AC component, so phase is
    /// meaningless.
    pub fn is_degenerate(&self) -> bool {
        self.amplitude == 0.0
    }
}

fn canonical_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Recovered depth for one scene point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthEstimate {
    /// Estimated object depth in meters (`d = z/2`).
    pub depth: f64,
    /// Recovered signal amplitude (for phase capture this is `α/2`).
    pub amplitude: f64,
    /// Set by harnesses that know ground truth exceeded the ambiguity
    /// distance; a real single-frequency measurement leaves this `false`.
    pub wrapped: bool,
    /// Amplitude-based confidence in `[0, 1]`. Zero marks a degenerate
    /// measurement.
    pub confidence: f64,
}

/// Confidence from recovered amplitude: `min(1, amplitude / reference)`.
pub fn confidence_from_amplitude(amplitude: f64, reference: f64) -> f64 {
    if reference <= 0.0 {
        return 0.0;
    }
    (amplitude / reference).clamp(0.0, 1.0)
}

/// Recover the phasor from four correlation samples taken at shifts
/// `τ·2πf = 0, π/2, π, 3π/2`.
///
/// If all four samples are equal there is no AC component; the result is the
/// degenerate phasor (amplitude 0, phase 0).
pub fn four_bucket(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Phasor> {
    if ![c1, c2, c3, c4].iter().all(|c| c.is_finite()) {
        return Err(Error::invalid("bucket samples must be finite"));
    }
    let im = c4 - c2;
    let re = c1 - c3;
    let p = Phasor::from_complex(re, im);
    Ok(Phasor {
        amplitude: 0.5 * p.amplitude,
        phase: p.phase,
    })
}

/// Convert a recovered phasor to depth at modulation frequency `f_mod`:
/// `z = c φ / (2π f)`, `d = z/2`.
///
/// Always reports `wrapped = false`; see the module docs.
pub fn phase_to_depth(phasor: &Phasor, f_mod: f64) -> Result<DepthEstimate> {
    if !f_mod.is_finite() || f_mod <= 0.0 {
        return Err(Error::invalid(format!(
            "modulation frequency must be finite and > 0, got {f_mod}"
        )));
    }
    let z = SPEED_OF_LIGHT * phasor.phase() / (TAU * f_mod);
    Ok(DepthEstimate {
        depth: z / 2.0,
        amplitude: phasor.amplitude(),
        wrapped: false,
        confidence: if phasor.is_degenerate() {
            0.0
        } else {
            confidence_from_amplitude(phasor.amplitude(), DEFAULT_CONFIDENCE_REFERENCE)
        },
    })
}

/// Depth beyond which single-frequency phase wraps: `c / (2 f_mod)`.
pub fn ambiguity_distance(f_mod: f64) -> f64 {
    assert!(
        f_mod.is_finite() && f_mod > 0.0,
        "modulation frequency must be finite and > 0"
    );
    SPEED_OF_LIGHT / (2.0 * f_mod)
}

/// Resultant phasor of `K` interfering returns `(α_i, φ_i)`: the complex sum
/// `Σ α_i e^{jφ_i}` converted back to amplitude and phase.
///
/// Exact cancellation yields the degenerate phasor (amplitude 0, phase 0).
pub fn multipath_phasor(paths: &[(f64, f64)]) -> Phasor {
    assert!(!paths.is_empty(), "need at least one path");
    let re: f64 = paths.iter().map(|&(a, phi)| a * phi.cos()).sum();
    let im: f64 = paths.iter().map(|&(a, phi)| a * phi.sin()).sum();
    Phasor::from_complex(re, im)
}

/// Full phase-correlation pipeline for one scene point: synthesize the four
/// buckets, add noise, recover the phasor, convert to depth.
///
/// With multipath present the result is the depth of the *resultant* phasor,
/// not of any individual return; single-frequency phase capture cannot
/// separate them.
pub fn estimate_depth_phase(
    point: &ScenePoint,
    f_mod: f64,
    noise: &NoiseSpec,
) -> Result<DepthEstimate> {
    let period = 1.0 / f_mod;
    let taus = [0.0, period / 4.0, period / 2.0, 3.0 * period / 4.0];
    let clean = synth_phase_correlation(point, f_mod, &taus)?;
    let noisy = add_noise(&clean, noise)?;
    let s = noisy.samples();
    let phasor = four_bucket(s[0], s[1], s[2], s[3])?;
    phase_to_depth(&phasor, f_mod)
}
