//! Forward models: synthesize the signal received from a scene point under
//! each of the three capture architectures, with optional additive noise.
//!
//! # Conventions
//!
//! * Modulation frequencies are ordinary frequencies in Hz, never angular.
//!   Every `2π` is written explicitly, so a modulation frequency of `f` Hz
//!   strobes as `cos(2π f t)`. Numeric examples like "100 MHz" plug in
//!   directly.
//! * `z` is the *round-trip* optical path length of a return; the depth of
//!   the reflecting object is `d = z / 2`.
//! * The emitted signal has unit amplitude; all gains live in the per-path
//!   attenuation `α`.
//! * Speed of light is exact ([`SPEED_OF_LIGHT`] = 299 792 458 m/s).
//!
//! # Signal models
//!
//! For a scene point with returns `(α_l, z_l)` and ambient level `β`, with
//! per-path phase `φ_l = 2π z_l f / c`:
//!
//! * phase correlation at shift `τ`:
//!   `c(τ) = ½ Σ_l α_l cos(2π f τ + φ_l) + β`
//! * frequency sweep sampled at `τ = 0`:
//!   `c(f) = ½ Σ_l α_l cos(2π z_l f / c) + β`
//! * integrating camera with exposure `t_E`:
//!   `I(f) = Σ_l α_l/(2π f) [sin(2π f (t_E + z_l/c)) − sin(2π f z_l/c)] + β t_E`
//!
//! # Noise
//!
//! [`add_noise`] perturbs each sample with i.i.d. zero-mean Gaussian noise.
//! SNR in dB is defined as `10·log₁₀(P_AC / σ²)` where `P_AC` is the
//! empirical variance of the noiseless samples (the DC/ambient component
//! carries no information and is excluded). The realization is a pure
//! function of the seed.

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// One optical return: attenuation and round-trip path length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPathComponent")]
pub struct PathComponent {
    /// Dimensionless attenuation `α ≥ 0` of this return.
    pub amplitude: f64,
    /// Round-trip optical path length `z ≥ 0` in meters.
    pub path_length: f64,
}

#[derive(Deserialize)]
struct RawPathComponent {
    amplitude: f64,
    path_length: f64,
}

impl TryFrom<RawPathComponent> for PathComponent {
    type Error = Error;
    fn try_from(raw: RawPathComponent) -> Result<Self> {
        PathComponent::new(raw.amplitude, raw.path_length)
    }
}

impl PathComponent {
    pub fn new(amplitude: f64, path_length: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::invalid(format!(
                "path amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !path_length.is_finite() || path_length < 0.0 {
            return Err(Error::invalid(format!(
                "path length must be finite and >= 0, got {path_length}"
            )));
        }
        Ok(Self {
            amplitude,
            path_length,
        })
    }

    /// Delay of this return in seconds, `z / c`.
    pub fn delay(&self) -> f64 {
        self.path_length / SPEED_OF_LIGHT
    }
}

/// A single scene point: one or more optical returns plus an ambient level.
///
/// Paths are kept sorted ascending by path length (canonical form), so the
/// first path is always the direct bounce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenePoint")]
pub struct ScenePoint {
    paths: Vec<PathComponent>,
    ambient: f64,
}

#[derive(Deserialize)]
struct RawScenePoint {
    paths: Vec<PathComponent>,
    ambient: f64,
}

impl TryFrom<RawScenePoint> for ScenePoint {
    type Error = Error;
    fn try_from(raw: RawScenePoint) -> Result<Self> {
        ScenePoint::new(raw.paths, raw.ambient)
    }
}

impl ScenePoint {
    pub fn new(mut paths: Vec<PathComponent>, ambient: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("scene point needs at least one path"));
        }
        if !ambient.is_finite() || ambient < 0.0 {
            return Err(Error::invalid(format!(
                "ambient must be finite and >= 0, got {ambient}"
            )));
        }
        paths.sort_by(|a, b| a.path_length.total_cmp(&b.path_length));
        Ok(Self { paths, ambient })
    }

    /// Single-return point.
    pub fn single(amplitude: f64, path_length: f64, ambient: f64) -> Result<Self> {
        Self::new(vec![PathComponent::new(amplitude, path_length)?], ambient)
    }

    /// Single return for an object at depth `d` (round trip `z = 2d`).
    pub fn from_depth(depth: f64, amplitude: f64, ambient: f64) -> Result<Self> {
        if !depth.is_finite() || depth < 0.0 {
            return Err(Error::invalid(format!(
                "depth must be finite and >= 0, got {depth}"
            )));
        }
        Self::single(amplitude, 2.0 * depth, ambient)
    }

    /// Returns, sorted ascending by path length.
    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn ambient(&self) -> f64 {
        self.ambient
    }

    /// Depth of the direct (shortest) return, `z₁ / 2`.
    pub fn direct_depth(&self) -> f64 {
        self.paths[0].path_length / 2.0
    }
}

/// Uniformly spaced set of modulation frequencies, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrequencySweep")]
pub struct FrequencySweep {
    /// Lowest modulation frequency, Hz.
    #[serde(rename = "f_min_hz")]
    pub f_min: f64,
    /// Highest modulation frequency, Hz.
    #[serde(rename = "f_max_hz")]
    pub f_max: f64,
    /// Number of frequencies sampled, including both endpoints.
    pub n_samples: usize,
}

#[derive(Deserialize)]
struct RawFrequencySweep {
    #[serde(rename = "f_min_hz")]
    f_min: f64,
    #[serde(rename = "f_max_hz")]
    f_max: f64,
    n_samples: usize,
}

impl TryFrom<RawFrequencySweep> for FrequencySweep {
    type Error = Error;
    fn try_from(raw: RawFrequencySweep) -> Result<Self> {
        FrequencySweep::new(raw.f_min, raw.f_max, raw.n_samples)
    }
}

impl FrequencySweep {
    pub fn new(f_min: f64, f_max: f64, n_samples: usize) -> Result<Self> {
        if !f_min.is_finite() || f_min <= 0.0 {
            return Err(Error::invalid(format!(
                "sweep f_min must be finite and > 0, got {f_min}"
            )));
        }
        if !f_max.is_finite() || f_max <= f_min {
            return Err(Error::invalid(format!(
                "sweep f_max must be finite and > f_min, got f_min={f_min}, f_max={f_max}"
            )));
        }
        if n_samples < 3 {
            return Err(Error::invalid(format!(
                "sweep needs at least 3 samples, got {n_samples}"
            )));
        }
        Ok(Self {
            f_min,
            f_max,
            n_samples,
        })
    }

    /// Swept bandwidth `f_max − f_min` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.f_max - self.f_min
    }

    /// Spacing between adjacent frequencies, Hz.
    pub fn spacing(&self) -> f64 {
        self.bandwidth() / (self.n_samples - 1) as f64
    }

    /// The sampled frequencies, ascending, endpoints exact.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_samples;
        (0..n)
            .map(|i| self.f_min + self.bandwidth() * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Coordinate a [`PrimalSignal`] is sampled against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    /// Correlation shift τ in seconds (phase-correlation capture).
    PhaseShift,
    /// Modulation frequency in Hz (swept-frequency capture).
    ModulationFrequency,
}

/// A real-valued signal sampled against its primal-domain coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSignal {
    domain: DomainKind,
    coordinates: Vec<f64>,
    samples: Vec<f64>,
}

impl PrimalSignal {
    /// Build a signal, validating the type invariants: coordinates strictly
    /// increasing, equal lengths, everything finite.
    pub fn new(domain: DomainKind, coordinates: Vec<f64>, samples: Vec<f64>) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::invalid("signal must not be empty"));
        }
        if coordinates.len() != samples.len() {
            return Err(Error::invalid(format!(
                "coordinate/sample length mismatch: {} vs {}",
                coordinates.len(),
                samples.len()
            )));
        }
        if coordinates.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        if coordinates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("coordinates must be strictly increasing"));
        }
        Ok(Self {
            domain,
            coordinates,
            samples,
        })
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample mean (the DC component, which carries the ambient level).
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Empirical variance of the samples about their mean. This is the AC
    /// power used by the SNR definition.
    pub fn ac_power(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / self.len() as f64
    }

    /// Number of mean-crossings of the sample sequence. A sinusoid spanning
    /// `k` cycles crosses its mean about `2k` times, so `crossings / 2`
    /// estimates the cycle count.
    pub fn zero_crossings(&self) -> usize {
        let m = self.mean();
        self.samples
            .windows(2)
            .filter(|w| (w[0] - m) * (w[1] - m) < 0.0)
            .count()
    }

    /// Replace the samples, keeping coordinates and domain.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.domain, self.coordinates.clone(), samples)
    }
}

/// Additive-noise specification: SNR in dB (may be `+∞` for noiseless) and
/// an explicit seed. Identical seed and inputs give a bit-identical
/// realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self { snr_db, seed }
    }

    /// No noise at all; the seed is ignored.
    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }
}

/// Per-path phase at modulation frequency `f_mod`: `φ = 2π z f / c`.
fn path_phase(path: &PathComponent, f_mod: f64) -> f64 {
    TAU * path.path_length * f_mod / SPEED_OF_LIGHT
}

/// Cross-correlation samples of a phase-correlation capture.
///
/// `samples[i] = ½ Σ_l α_l cos(2π f_mod τ_i + φ_l) + β` with
/// `φ_l = 2π z_l f_mod / c`.
pub fn synth_phase_correlation(
    point: &ScenePoint,
    f_mod: f64,
    taus: &[f64],
) -> Result<PrimalSignal> {
    if !f_mod.is_finite() || f_mod <= 0.0 {
        return Err(Error::invalid(format!(
            "modulation frequency must be finite and > 0, got {f_mod}"
        )));
    }
    if taus.is_empty() {
        return Err(Error::invalid("need at least one correlation shift"));
    }
    let phases: Vec<f64> = point.paths().iter().map(|p| path_phase(p, f_mod)).collect();
    let samples: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let ac: f64 = point
                .paths()
                .iter()
                .zip(&phases)
                .map(|(p, &phi)| p.amplitude * (TAU * f_mod * tau + phi).cos())
                .sum();
            0.5 * ac + point.ambient()
        })
        .collect();
    PrimalSignal::new(DomainKind::PhaseShift, taus.to_vec(), samples)
}

/// Received signal of a swept-frequency capture sampled at zero shift.
///
/// `samples[i] = ½ Σ_l α_l cos(2π z_l f_i / c) + β`. Along the sweep each
/// path oscillates with period `c / z_l` Hz, so nearer objects produce lower
/// frequencies in the primal domain.
pub fn synth_fd_sweep(point: &ScenePoint, sweep: &FrequencySweep) -> PrimalSignal {
    let freqs = sweep.frequencies();
    let samples: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let ac: f64 = point
                .paths()
                .iter()
                .map(|p| p.amplitude * path_phase(p, f).cos())
                .sum();
            0.5 * ac + point.ambient()
        })
        .collect();
    PrimalSignal::new(DomainKind::ModulationFrequency, freqs, samples)
        .expect("sweep invariants guarantee a valid signal")
}

/// Intensity recorded by an integrating camera over exposure `t_E` at each
/// swept frequency.
///
/// `samples[i] = Σ_l α_l/(2π f_i) [sin(2π f_i (t_E + z_l/c)) − sin(2π f_i z_l/c)] + β t_E`.
/// The AC amplitude decays as `1/f_i`.
pub fn synth_slow_sweep(
    point: &ScenePoint,
    sweep: &FrequencySweep,
    exposure: f64,
) -> Result<PrimalSignal> {
    if !exposure.is_finite() || exposure <= 0.0 {
        return Err(Error::invalid(format!(
            "exposure must be finite and > 0, got {exposure}"
        )));
    }
    let freqs = sweep.frequencies();
    let samples: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let ac: f64 = point
                .paths()
                .iter()
                .map(|p| {
                    let delay = p.delay();
                    p.amplitude / (TAU * f)
                        * ((TAU * f * (exposure + delay)).sin() - (TAU * f * delay).sin())
                })
                .sum();
            ac + point.ambient() * exposure
        })
        .collect();
    PrimalSignal::new(DomainKind::ModulationFrequency, freqs, samples)
}

/// Add zero-mean Gaussian noise with variance set by the SNR definition
/// `snr_db = 10·log₁₀(P_AC / σ²)`, where `P_AC` is the empirical variance of
/// the input samples.
///
/// `snr_db = +∞` returns the input unchanged. A signal with zero AC power
/// cannot be given a finite SNR and yields [`Error::DegenerateSignal`].
pub fn add_noise(signal: &PrimalSignal, noise: &NoiseSpec) -> Result<PrimalSignal> {
    if noise.is_noiseless() {
        return Ok(signal.clone());
    }
    if !noise.snr_db.is_finite() {
        return Err(Error::invalid(format!(
            "snr_db must be finite or +inf, got {}",
            noise.snr_db
        )));
    }
    if signal.len() < 2 {
        return Err(Error::invalid(
            "need at least 2 samples to define AC power for noise injection",
        ));
    }
    let p_ac = signal.ac_power();
    if p_ac <= 0.0 {
        return Err(Error::DegenerateSignal(
            "signal has zero AC power; SNR is undefined".into(),
        ));
    }
    let sigma = (p_ac / 10f64.powf(noise.snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let samples: Vec<f64> = signal
        .samples()
        .iter()
        .map(|&s| s + normal.sample(&mut rng))
        .collect();
    signal.with_samples(samples)
}
