//! Per-pixel scene simulation, depth-map reconstruction, metrics, and Monte
//! Carlo experiment orchestration.
//!
//! Pixels are independent: simulation and reconstruction parallelize freely
//! because every pixel derives its own noise seed from the global seed and
//! its coordinates (see [`mix_pixel_seed`]), so results do not depend on
//! scheduling order. A `(scene, mode, seed, estimator)` tuple fully
//! determines the reconstructed map, bit for bit.

use crate::error::{Error, Result};
use crate::freq_domain::{
    axial_resolution, estimate_tone_interp, estimate_tone_qf, periodogram_with, SpectralWindow,
};
use crate::phase_tof::{estimate_depth_phase, four_bucket, phase_to_depth};
use crate::signal_model::{
    add_noise, synth_fd_sweep, synth_phase_correlation, synth_slow_sweep, FrequencySweep,
    NoiseSpec, PathComponent, PrimalSignal, ScenePoint,
};
use crate::slow_tof::{estimate_depth_slow, SlowCaptureConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A rectangular grid of scene points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSceneSpec")]
pub struct SceneSpec {
    width: usize,
    height: usize,
    /// Row-major, `height * width` entries.
    points: Vec<ScenePoint>,
}

#[derive(Deserialize)]
struct RawSceneSpec {
    width: usize,
    height: usize,
    points: Vec<ScenePoint>,
}

impl TryFrom<RawSceneSpec> for SceneSpec {
    type Error = Error;
    fn try_from(raw: RawSceneSpec) -> Result<Self> {
        SceneSpec::new(raw.width, raw.height, raw.points)
    }
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, points: Vec<ScenePoint>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("scene dimensions must be at least 1x1"));
        }
        if points.len() != width * height {
            return Err(Error::invalid(format!(
                "scene needs {} points for {width}x{height}, got {}",
                width * height,
                points.len()
            )));
        }
        Ok(Self {
            width,
            height,
            points,
        })
    }

    /// Every pixel at the same depth.
    pub fn uniform(
        width: usize,
        height: usize,
        depth: f64,
        amplitude: f64,
        ambient: f64,
    ) -> Result<Self> {
        let p = ScenePoint::from_depth(depth, amplitude, ambient)?;
        Self::new(width, height, vec![p; width * height])
    }

    /// Depth ramp from `depth_min` (left edge) to `depth_max` (right edge).
    pub fn ramp(
        width: usize,
        height: usize,
        depth_min: f64,
        depth_max: f64,
        amplitude: f64,
        ambient: f64,
    ) -> Result<Self> {
        if !(depth_min.is_finite() && depth_max.is_finite()) || depth_min <= 0.0 || depth_max < depth_min {
            return Err(Error::invalid(format!(
                "ramp depths must satisfy 0 < depth_min <= depth_max, got {depth_min}..{depth_max}"
            )));
        }
        let mut points = Vec::with_capacity(width * height);
        for _row in 0..height {
            for col in 0..width {
                let t = if width == 1 {
                    0.0
                } else {
                    col as f64 / (width - 1) as f64
                };
                let d = depth_min + (depth_max - depth_min) * t;
                points.push(ScenePoint::from_depth(d, amplitude, ambient)?);
            }
        }
        Self::new(width, height, points)
    }

    /// A spherical bump protruding from a background plane toward the
    /// camera. `radius` is a fraction of the smaller image dimension.
    pub fn sphere(
        width: usize,
        height: usize,
        background_depth: f64,
        sphere_depth: f64,
        radius: f64,
        amplitude: f64,
        ambient: f64,
    ) -> Result<Self> {
        if sphere_depth <= 0.0 || background_depth < sphere_depth {
            return Err(Error::invalid(
                "sphere requires 0 < sphere_depth <= background_depth",
            ));
        }
        let r_px = radius * width.min(height) as f64;
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        let mut points = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let rho = ((col as f64 - cx).powi(2) + (row as f64 - cy).powi(2)).sqrt();
                let d = if rho < r_px && r_px > 0.0 {
                    let cap = (1.0 - (rho / r_px).powi(2)).sqrt();
                    background_depth - (background_depth - sphere_depth) * cap
                } else {
                    background_depth
                };
                points.push(ScenePoint::from_depth(d, amplitude, ambient)?);
            }
        }
        Self::new(width, height, points)
    }

    /// Add a second return to every pixel, mimicking an interreflection:
    /// amplitude `fraction` of the direct return, path longer by
    /// `extra_path` meters.
    pub fn with_second_path(&self, fraction: f64, extra_path: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::invalid("multipath fraction must lie in [0, 1]"));
        }
        if !extra_path.is_finite() || extra_path <= 0.0 {
            return Err(Error::invalid("extra path length must be > 0"));
        }
        let points: Vec<ScenePoint> = self
            .points
            .iter()
            .map(|p| {
                let direct = p.paths()[0];
                let mut paths = p.paths().to_vec();
                paths.push(PathComponent::new(
                    direct.amplitude * fraction,
                    direct.path_length + extra_path,
                )?);
                ScenePoint::new(paths, p.ambient())
            })
            .collect::<Result<_>>()?;
        Self::new(self.width, self.height, points)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[ScenePoint] {
        &self.points
    }

    pub fn point(&self, row: usize, col: usize) -> &ScenePoint {
        &self.points[row * self.width + col]
    }

    /// Ground-truth map: direct-return depth and amplitude per pixel.
    pub fn truth_map(&self) -> DepthMap {
        let depth: Vec<f64> = self.points.iter().map(|p| p.direct_depth()).collect();
        let amplitude: Vec<f64> = self.points.iter().map(|p| p.paths()[0].amplitude).collect();
        let valid = vec![true; self.points.len()];
        DepthMap::from_channels(self.width, self.height, depth, amplitude, valid)
            .expect("scene dimensions are valid")
    }
}

/// Capture architecture used for a simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CaptureMode {
    /// Four-bucket phase correlation at a single modulation frequency.
    PhaseTof { f_mod_hz: f64 },
    /// Swept modulation frequency sampled by a fast sensor.
    FdTof { sweep: FrequencySweep },
    /// Swept modulation frequency integrated by a slow camera.
    SlowTof {
        sweep: FrequencySweep,
        exposure_s: f64,
    },
}

impl CaptureMode {
    pub fn name(&self) -> &'static str {
        match self {
            CaptureMode::PhaseTof { .. } => "phase_tof",
            CaptureMode::FdTof { .. } => "fd_tof",
            CaptureMode::SlowTof { .. } => "slow_tof",
        }
    }
}

/// Per-pixel estimator used during reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    FourBucket,
    InterpPeriodogram,
    QuinnFernandes,
    SlowTof,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::FourBucket => "four_bucket",
            EstimatorKind::InterpPeriodogram => "interp_periodogram",
            EstimatorKind::QuinnFernandes => "quinn_fernandes",
            EstimatorKind::SlowTof => "slow_tof",
        }
    }

    fn compatible_with(&self, mode: &CaptureMode) -> bool {
        matches!(
            (self, mode),
            (EstimatorKind::FourBucket, CaptureMode::PhaseTof { .. })
                | (EstimatorKind::InterpPeriodogram, CaptureMode::FdTof { .. })
                | (EstimatorKind::QuinnFernandes, CaptureMode::FdTof { .. })
                | (EstimatorKind::SlowTof, CaptureMode::SlowTof { .. })
        )
    }
}

/// One simulated acquisition: a per-pixel stack of primal-domain signals.
#[derive(Debug, Clone)]
pub struct SignalCube {
    mode: CaptureMode,
    width: usize,
    height: usize,
    signals: Vec<PrimalSignal>,
}

impl SignalCube {
    pub fn mode(&self) -> &CaptureMode {
        &self.mode
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn signals(&self) -> &[PrimalSignal] {
        &self.signals
    }

    pub fn signal(&self, row: usize, col: usize) -> &PrimalSignal {
        &self.signals[row * self.width + col]
    }
}

/// Reconstructed (or ground-truth) depth and amplitude grid. Pixels that
/// failed estimation are flagged invalid and carry NaN, never a silent zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    amplitude: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    pub fn from_channels(
        width: usize,
        height: usize,
        depth: Vec<f64>,
        amplitude: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 {
            return Err(Error::invalid("map dimensions must be at least 1x1"));
        }
        if depth.len() != n || amplitude.len() != n || valid.len() != n {
            return Err(Error::invalid("channel length must equal width*height"));
        }
        for i in 0..n {
            if valid[i] && !(depth[i].is_finite() && depth[i] >= 0.0) {
                return Err(Error::invalid(format!(
                    "valid pixel {i} has non-finite or negative depth {}",
                    depth[i]
                )));
            }
        }
        Ok(Self {
            width,
            height,
            depth,
            amplitude,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Uniform map holding one depth everywhere (used as a comparison
    /// baseline).
    pub fn constant(width: usize, height: usize, depth: f64) -> Result<Self> {
        let n = width * height;
        Self::from_channels(width, height, vec![depth; n], vec![1.0; n], vec![true; n])
    }
}

/// Derive the per-pixel noise seed from the global seed and the pixel
/// coordinates.
///
/// The mixing function is `splitmix64(seed XOR (row << 32 | col))`, where
/// `splitmix64` is the standard finalizer
/// (`x += 0x9E3779B97F4A7C15; x = (x ^ x>>30) * 0xBF58476D1CE4E5B9;
/// x = (x ^ x>>27) * 0x94D049BB133111EB; x ^= x>>31`). For a fixed global
/// seed this is injective in `(row, col)` for any grid smaller than 2^32 per
/// side, so pixel noise streams never collide and any implementation of the
/// same mixing reproduces the cube exactly.
pub fn mix_pixel_seed(global_seed: u64, row: u32, col: u32) -> u64 {
    let mut x = global_seed ^ (((row as u64) << 32) | col as u64);
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Quarter-period correlation shifts sampled by a four-bucket capture.
fn four_bucket_taus(f_mod: f64) -> [f64; 4] {
    let period = 1.0 / f_mod;
    [0.0, period / 4.0, period / 2.0, 3.0 * period / 4.0]
}

/// Simulate a full acquisition of `scene` under `mode`.
///
/// Per-pixel signals come from the matching forward model; per-pixel noise
/// seeds derive from `(noise.seed, row, col)` via [`mix_pixel_seed`], so the
/// cube is reproducible regardless of parallel scheduling.
pub fn simulate_capture(
    scene: &SceneSpec,
    mode: &CaptureMode,
    noise: &NoiseSpec,
) -> Result<SignalCube> {
    let width = scene.width();
    let signals: Vec<PrimalSignal> = scene
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let (row, col) = (i / width, i % width);
            let clean = match mode {
                CaptureMode::PhaseTof { f_mod_hz } => {
                    synth_phase_correlation(point, *f_mod_hz, &four_bucket_taus(*f_mod_hz))
                }
                CaptureMode::FdTof { sweep } => Ok(synth_fd_sweep(point, sweep)),
                CaptureMode::SlowTof { sweep, exposure_s } => {
                    synth_slow_sweep(point, sweep, *exposure_s)
                }
            }
            .map_err(|e| e.at_pixel(row, col))?;
            let pixel_noise = NoiseSpec::new(noise.snr_db, mix_pixel_seed(noise.seed, row as u32, col as u32));
            add_noise(&clean, &pixel_noise).map_err(|e| e.at_pixel(row, col))
        })
        .collect::<Result<_>>()?;
    Ok(SignalCube {
        mode: mode.clone(),
        width,
        height: scene.height(),
        signals,
    })
}

/// Reconstruct a depth map from a simulated cube with the chosen estimator.
///
/// Pixels whose estimator call fails are flagged invalid, never
/// interpolated. Requesting an estimator that cannot decode the cube's
/// capture mode is an error.
pub fn reconstruct(cube: &SignalCube, estimator: EstimatorKind) -> Result<DepthMap> {
    if !estimator.compatible_with(cube.mode()) {
        return Err(Error::EstimatorMismatch {
            estimator: estimator.name().into(),
            mode: cube.mode().name().into(),
        });
    }
    let slow_cfg = match cube.mode() {
        CaptureMode::SlowTof { sweep, exposure_s } => {
            Some(SlowCaptureConfig::new(*exposure_s, *sweep)?)
        }
        _ => None,
    };
    let f_mod = match cube.mode() {
        CaptureMode::PhaseTof { f_mod_hz } => Some(*f_mod_hz),
        _ => None,
    };

    let results: Vec<(f64, f64, bool)> = cube
        .signals()
        .par_iter()
        .map(|sig| {
            let est: Result<(f64, f64)> = match estimator {
                EstimatorKind::FourBucket => {
                    let s = sig.samples();
                    four_bucket(s[0], s[1], s[2], s[3])
                        .and_then(|ph| phase_to_depth(&ph, f_mod.expect("checked by mode")))
                        .map(|d| (d.depth, d.amplitude))
                }
                EstimatorKind::InterpPeriodogram => {
                    estimate_tone_interp(sig).map(|p| (p.depth, p.amplitude))
                }
                EstimatorKind::QuinnFernandes => {
                    estimate_tone_qf(sig, None).map(|p| (p.depth, p.amplitude))
                }
                EstimatorKind::SlowTof => {
                    estimate_depth_slow(sig, slow_cfg.as_ref().expect("checked by mode"))
                        .map(|p| (p.depth, p.amplitude))
                }
            };
            match est {
                Ok((d, a)) if d.is_finite() && d >= 0.0 => (d, a, true),
                _ => (f64::NAN, f64::NAN, false),
            }
        })
        .collect();

    let depth = results.iter().map(|r| r.0).collect();
    let amplitude = results.iter().map(|r| r.1).collect();
    let valid = results.iter().map(|r| r.2).collect();
    DepthMap::from_channels(cube.width(), cube.height(), depth, amplitude, valid)
}

/// Peak signal-to-noise ratio between a reconstruction and ground truth,
/// over pixels valid in both maps.
///
/// `peak` is the maximum truth depth; the result is
/// `10·log10(peak² / MSE)`, `+∞` for an exact match. No valid pixels in
/// common is an undefined metric.
pub fn psnr(reconstructed: &DepthMap, truth: &DepthMap) -> Result<f64> {
    if reconstructed.width() != truth.width() || reconstructed.height() != truth.height() {
        return Err(Error::invalid(format!(
            "map dimensions differ: {}x{} vs {}x{}",
            reconstructed.width(),
            reconstructed.height(),
            truth.width(),
            truth.height()
        )));
    }
    let peak = truth
        .depth()
        .iter()
        .zip(truth.valid())
        .filter(|(_, &v)| v)
        .map(|(&d, _)| d)
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() || peak <= 0.0 {
        return Err(Error::UndefinedMetric(
            "truth map has no valid positive depths".into(),
        ));
    }
    let mut mse = 0.0;
    let mut n = 0usize;
    for i in 0..truth.depth().len() {
        if truth.valid()[i] && reconstructed.valid()[i] {
            let e = reconstructed.depth()[i] - truth.depth()[i];
            mse += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric(
            "no pixels are valid in both maps".into(),
        ));
    }
    let mse = mse / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Percent depth errors over pixels valid in both maps.
pub fn percent_errors(reconstructed: &DepthMap, truth: &DepthMap) -> Vec<f64> {
    truth
        .depth()
        .iter()
        .zip(reconstructed.depth())
        .zip(truth.valid().iter().zip(reconstructed.valid()))
        .filter(|(_, (&tv, &rv))| tv && rv)
        .filter(|((&t, _), _)| t > 0.0)
        .map(|((&t, &r), _)| (r - t).abs() / t * 100.0)
        .collect()
}

/// Histogram of percent errors over fixed bin edges, plus summary stats.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorHistogram {
    /// Upper bin edges in percent; the final bin is open-ended.
    pub bin_edges_percent: Vec<f64>,
    pub counts: Vec<usize>,
    pub fraction_within_1_percent: f64,
    pub median_percent: f64,
    pub mean_percent: f64,
}

impl ErrorHistogram {
    pub fn from_errors(mut errors: Vec<f64>) -> Option<Self> {
        if errors.is_empty() {
            return None;
        }
        let edges = vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
        let mut counts = vec![0usize; edges.len() + 1];
        for &e in &errors {
            let bin = edges.iter().position(|&edge| e <= edge).unwrap_or(edges.len());
            counts[bin] += 1;
        }
        let within = errors.iter().filter(|&&e| e <= 1.0).count() as f64 / errors.len() as f64;
        errors.sort_by(f64::total_cmp);
        let median = errors[errors.len() / 2];
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Some(Self {
            bin_edges_percent: edges,
            counts,
            fraction_within_1_percent: within,
            median_percent: median,
            mean_percent: mean,
        })
    }
}

/// One row of a Monte Carlo comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub estimator: String,
    pub snr_db: f64,
    pub trials: usize,
    pub median_percent_error: f64,
    pub mean_percent_error: f64,
    pub rmse_m: f64,
    /// Populated only by experiments that reconstruct full maps.
    pub psnr_db: Option<f64>,
}

/// Monte Carlo comparison of the capture architectures across SNR levels.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub depth_m: f64,
    pub trials_per_condition: usize,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Rows for one estimator, in the order the SNR levels were given.
    pub fn rows_for(&self, estimator: &str) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.estimator == estimator).collect()
    }
}

fn stats_row(estimator: &str, snr_db: f64, depth: f64, estimates: &[f64]) -> ReportRow {
    let mut pct: Vec<f64> = estimates
        .iter()
        .map(|&e| (e - depth).abs() / depth * 100.0)
        .collect();
    pct.sort_by(f64::total_cmp);
    let median = pct[pct.len() / 2];
    let mean = pct.iter().sum::<f64>() / pct.len() as f64;
    let rmse = (estimates
        .iter()
        .map(|&e| (e - depth) * (e - depth))
        .sum::<f64>()
        / estimates.len() as f64)
        .sqrt();
    ReportRow {
        estimator: estimator.into(),
        snr_db,
        trials: estimates.len(),
        median_percent_error: median,
        mean_percent_error: mean,
        rmse_m: rmse,
        psnr_db: None,
    }
}

/// Run `trials` Monte Carlo estimates per SNR level for a single object at
/// `depth`, through both the phase-correlation arm (at `phase_f_mod`) and
/// the swept-frequency arm (over `fd_sweep`, with both the interpolated
/// periodogram and the iterative refinement).
///
/// Per-trial seeds derive from `(seed, level index, trial index)` through
/// the same mixing as pixel seeds. Estimator failures in a trial count as
/// 100% error rather than being dropped, so reported statistics never hide
/// guard violations.
pub fn snr_sweep_experiment(
    depth: f64,
    snr_levels_db: &[f64],
    trials: usize,
    phase_f_mod: f64,
    fd_sweep: &FrequencySweep,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if snr_levels_db.is_empty() {
        return Err(Error::invalid("need at least one SNR level"));
    }
    let point = ScenePoint::from_depth(depth, 1.0, 0.0)?;
    let fd_clean = synth_fd_sweep(&point, fd_sweep);

    let mut rows = Vec::new();
    for (level_idx, &snr_db) in snr_levels_db.iter().enumerate() {
        let per_trial: Vec<(f64, f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let noise = NoiseSpec::new(
                    snr_db,
                    mix_pixel_seed(seed, level_idx as u32, trial as u32),
                );
                let phase = estimate_depth_phase(&point, phase_f_mod, &noise)
                    .map(|d| d.depth)
                    .unwrap_or(0.0);
                // Shared noisy record for a paired comparison of the two
                // frequency-domain estimators.
                let (interp, qf) = match add_noise(&fd_clean, &noise) {
                    Ok(noisy) => (
                        estimate_tone_interp(&noisy).map(|p| p.depth).unwrap_or(0.0),
                        estimate_tone_qf(&noisy, None).map(|p| p.depth).unwrap_or(0.0),
                    ),
                    Err(_) => (0.0, 0.0),
                };
                (phase, interp, qf)
            })
            .collect();
        let phase: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
        let interp: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
        let qf: Vec<f64> = per_trial.iter().map(|t| t.2).collect();
        rows.push(stats_row("phase_four_bucket", snr_db, depth, &phase));
        rows.push(stats_row("fd_interp", snr_db, depth, &interp));
        rows.push(stats_row("fd_qf", snr_db, depth, &qf));
    }
    Ok(ExperimentReport {
        depth_m: depth,
        trials_per_condition: trials,
        rows,
    })
}

/// Empirically locate the two-path merge threshold of a sweep.
///
/// Two equal-amplitude returns at `base_path` and `base_path + Δz` are
/// synthesized over a scan of separations; for each, the rectangular-window
/// spectrum is searched for distinct mainlobes (local maxima above half the
/// global peak). The reported threshold is the largest scanned separation at
/// which the pair still merges into a single lobe, plus half a scan step.
/// It lands near the analytic bound [`axial_resolution`].
pub fn merge_threshold_experiment(sweep: &FrequencySweep, base_path: f64) -> Result<f64> {
    if !base_path.is_finite() || base_path <= 0.0 {
        return Err(Error::invalid("base path length must be > 0"));
    }
    let bound = axial_resolution(sweep);
    let steps = 200usize;
    let lo = 0.3 * bound;
    let hi = 2.2 * bound;
    let step = (hi - lo) / steps as f64;

    let mut last_merged = lo;
    for i in 0..=steps {
        let dz = lo + step * i as f64;
        let point = ScenePoint::new(
            vec![
                PathComponent::new(1.0, base_path)?,
                PathComponent::new(1.0, base_path + dz)?,
            ],
            0.0,
        )?;
        let sig = synth_fd_sweep(&point, sweep);
        if count_mainlobes(&sig)? < 2 {
            last_merged = dz;
        }
    }
    Ok(last_merged + 0.5 * step)
}

/// Count distinct mainlobes: local maxima of the rectangular-window spectrum
/// above half the global maximum (rectangular sidelobes sit at ~0.22 and are
/// excluded).
fn count_mainlobes(signal: &PrimalSignal) -> Result<usize> {
    let spec = periodogram_with(signal, SpectralWindow::Rectangular, 8)?;
    let mag = spec.magnitude();
    let global = mag.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 {
        return Ok(0);
    }
    let floor = 0.5 * global;
    let mut count = 0;
    for k in 1..mag.len() - 1 {
        if mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] >= floor {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq_domain::PeakStatus;

    fn fd_mode(n: usize) -> CaptureMode {
        CaptureMode::FdTof {
            sweep: FrequencySweep::new(10e6, 1e9, n).unwrap(),
        }
    }

    #[test]
    fn one_pixel_scene_reduces_to_the_single_point_synthesizer() {
        let scene = SceneSpec::uniform(1, 1, 1.5, 1.0, 0.2).unwrap();
        let sweep = FrequencySweep::new(10e6, 1e9, 64).unwrap();
        let cube = simulate_capture(&scene, &fd_mode(64), &NoiseSpec::noiseless()).unwrap();
        let direct = synth_fd_sweep(scene.point(0, 0), &sweep);
        assert_eq!(cube.signal(0, 0), &direct);
    }

    #[test]
    fn same_seed_gives_bit_identical_cubes() {
        let scene = SceneSpec::ramp(8, 6, 0.5, 3.0, 1.0, 0.1).unwrap();
        let noise = NoiseSpec::new(15.0, 1234);
        let a = simulate_capture(&scene, &fd_mode(32), &noise).unwrap();
        let b = simulate_capture(&scene, &fd_mode(32), &noise).unwrap();
        for (sa, sb) in a.signals().iter().zip(b.signals()) {
            let bits_a: Vec<u64> = sa.samples().iter().map(|s| s.to_bits()).collect();
            let bits_b: Vec<u64> = sb.samples().iter().map(|s| s.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn uniform_scene_pixels_identical_before_noise() {
        let scene = SceneSpec::uniform(4, 3, 2.0, 1.0, 0.0).unwrap();
        let cube = simulate_capture(&scene, &fd_mode(32), &NoiseSpec::noiseless()).unwrap();
        let first = cube.signal(0, 0);
        for sig in cube.signals() {
            assert_eq!(sig, first);
        }
    }

    #[test]
    fn pixel_seeds_differ_across_pixels() {
        let s = 42u64;
        let mut seen = std::collections::HashSet::new();
        for row in 0..64u32 {
            for col in 0..64u32 {
                assert!(seen.insert(mix_pixel_seed(s, row, col)));
            }
        }
    }

    #[test]
    fn reconstruct_uniform_noiseless_scene() {
        let scene = SceneSpec::uniform(4, 4, 1.0, 1.0, 0.1).unwrap();
        let cube = simulate_capture(&scene, &fd_mode(256), &NoiseSpec::noiseless()).unwrap();
        let map = reconstruct(&cube, EstimatorKind::QuinnFernandes).unwrap();
        assert_eq!(map.valid_count(), 16);
        for &d in map.depth() {
            assert!((d - 1.0).abs() < 1e-3, "depth {d}");
        }
    }

    #[test]
    fn reconstruct_rejects_estimator_mode_mismatch() {
        let scene = SceneSpec::uniform(2, 2, 1.0, 1.0, 0.0).unwrap();
        let cube = simulate_capture(
            &scene,
            &CaptureMode::PhaseTof { f_mod_hz: 50e6 },
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        match reconstruct(&cube, EstimatorKind::QuinnFernandes) {
            Err(Error::EstimatorMismatch { .. }) => {}
            other => panic!("expected EstimatorMismatch, got {other:?}"),
        }
    }

    #[test]
    fn failing_pixels_are_flagged_invalid_not_zero() {
        // A pixel at 2 cm depth fails the cycle guard under this sweep; it
        // must come back invalid while the rest reconstruct.
        let mut points = vec![ScenePoint::from_depth(1.0, 1.0, 0.0).unwrap(); 4];
        points[2] = ScenePoint::from_depth(0.02, 1.0, 0.0).unwrap();
        let scene = SceneSpec::new(2, 2, points).unwrap();
        let cube = simulate_capture(&scene, &fd_mode(256), &NoiseSpec::noiseless()).unwrap();
        let map = reconstruct(&cube, EstimatorKind::QuinnFernandes).unwrap();
        assert!(!map.valid()[2]);
        assert!(map.depth()[2].is_nan());
        assert_eq!(map.valid_count(), 3);
    }

    #[test]
    fn phase_mode_reconstruction_round_trips() {
        let scene = SceneSpec::uniform(3, 2, 1.0, 1.0, 0.3).unwrap();
        let cube = simulate_capture(
            &scene,
            &CaptureMode::PhaseTof { f_mod_hz: 50e6 },
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        let map = reconstruct(&cube, EstimatorKind::FourBucket).unwrap();
        for &d in map.depth() {
            assert!((d - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn psnr_identical_maps_is_infinite() {
        let scene = SceneSpec::ramp(8, 8, 0.5, 3.0, 1.0, 0.0).unwrap();
        let truth = scene.truth_map();
        assert_eq!(psnr(&truth, &truth).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_closed_form_case() {
        // Truth 1 m everywhere, reconstruction 1.1 m, peak 1 m:
        // 10*log10(1 / 0.01) = 20 dB.
        let truth = DepthMap::constant(4, 4, 1.0).unwrap();
        let recon = DepthMap::constant(4, 4, 1.1).unwrap();
        let p = psnr(&recon, &truth).unwrap();
        assert!((p - 20.0).abs() < 1e-9, "psnr {p}");
    }

    #[test]
    fn psnr_undefined_without_common_valid_pixels() {
        let truth = DepthMap::constant(2, 2, 1.0).unwrap();
        let invalid = DepthMap::from_channels(
            2,
            2,
            vec![f64::NAN; 4],
            vec![f64::NAN; 4],
            vec![false; 4],
        )
        .unwrap();
        assert!(matches!(
            psnr(&invalid, &truth),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(psnr(&truth, &DepthMap::constant(3, 2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn psnr_degrades_with_noise() {
        let scene = SceneSpec::ramp(16, 16, 0.5, 3.0, 1.0, 0.0).unwrap();
        let truth = scene.truth_map();
        let mode = fd_mode(256);
        let mut psnrs = Vec::new();
        for snr in [30.0, 10.0] {
            let cube = simulate_capture(&scene, &mode, &NoiseSpec::new(snr, 9)).unwrap();
            let map = reconstruct(&cube, EstimatorKind::QuinnFernandes).unwrap();
            psnrs.push(psnr(&map, &truth).unwrap());
        }
        assert!(
            psnrs[0] > psnrs[1],
            "PSNR should fall as SNR falls: {psnrs:?}"
        );
    }

    #[test]
    fn report_stats_are_pixel_permutation_invariant() {
        let estimates = vec![1.01, 0.98, 1.02, 1.0, 0.97];
        let mut shuffled = estimates.clone();
        shuffled.reverse();
        let a = stats_row("e", 10.0, 1.0, &estimates);
        let b = stats_row("e", 10.0, 1.0, &shuffled);
        assert_eq!(a.median_percent_error, b.median_percent_error);
        assert_eq!(a.mean_percent_error, b.mean_percent_error);
        assert_eq!(a.rmse_m, b.rmse_m);
    }

    #[test]
    fn snr_sweep_noiseless_level_reports_near_zero_error() {
        let sweep = FrequencySweep::new(10e6, 1e9, 256).unwrap();
        let report =
            snr_sweep_experiment(1.0, &[f64::INFINITY], 3, 100e6, &sweep, 7).unwrap();
        for row in &report.rows {
            assert!(
                row.median_percent_error < 0.2,
                "{} at inf SNR: {}%",
                row.estimator,
                row.median_percent_error
            );
        }
    }

    #[test]
    fn snr_sweep_rejects_zero_trials() {
        let sweep = FrequencySweep::new(10e6, 1e9, 64).unwrap();
        assert!(snr_sweep_experiment(1.0, &[10.0], 0, 100e6, &sweep, 7).is_err());
        assert!(snr_sweep_experiment(1.0, &[], 10, 100e6, &sweep, 7).is_err());
    }

    #[test]
    fn snr_sweep_is_deterministic() {
        let sweep = FrequencySweep::new(10e6, 1e9, 128).unwrap();
        let a = snr_sweep_experiment(1.0, &[5.0, 20.0], 50, 100e6, &sweep, 11).unwrap();
        let b = snr_sweep_experiment(1.0, &[5.0, 20.0], 50, 100e6, &sweep, 11).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.median_percent_error.to_bits(), rb.median_percent_error.to_bits());
            assert_eq!(ra.rmse_m.to_bits(), rb.rmse_m.to_bits());
        }
    }

    #[test]
    fn invalid_pixel_count_does_not_rise_with_snr() {
        // Statistical invariant: raising SNR never produces more failed
        // pixels, checked over a few seeds.
        let scene = SceneSpec::ramp(12, 12, 0.5, 3.0, 1.0, 0.0).unwrap();
        let mode = fd_mode(256);
        for seed in 0..3u64 {
            let count = |snr: f64| {
                let cube = simulate_capture(&scene, &mode, &NoiseSpec::new(snr, seed)).unwrap();
                let map = reconstruct(&cube, EstimatorKind::QuinnFernandes).unwrap();
                map.depth().len() - map.valid_count()
            };
            assert!(count(30.0) <= count(1.0), "seed {seed}");
        }
    }

    #[test]
    fn merge_threshold_tracks_the_analytic_bound() {
        let sweep = FrequencySweep::new(50e6, 150e6, 256).unwrap();
        let bound = axial_resolution(&sweep);
        let thr = merge_threshold_experiment(&sweep, 4.0).unwrap();
        assert!(
            (thr - bound).abs() <= 0.2 * bound,
            "empirical {thr} vs bound {bound}"
        );
    }

    #[test]
    fn scene_generators_validate() {
        assert!(SceneSpec::uniform(0, 4, 1.0, 1.0, 0.0).is_err());
        assert!(SceneSpec::ramp(4, 4, -1.0, 2.0, 1.0, 0.0).is_err());
        assert!(SceneSpec::ramp(4, 4, 3.0, 2.0, 1.0, 0.0).is_err());
        let scene = SceneSpec::sphere(9, 9, 2.0, 1.0, 0.4, 1.0, 0.0).unwrap();
        // Center bulges toward the camera, corners sit on the background.
        assert!(scene.point(4, 4).direct_depth() < scene.point(0, 0).direct_depth());
        assert_eq!(scene.point(0, 0).direct_depth(), 2.0);
    }

    #[test]
    fn second_path_augments_every_pixel() {
        let scene = SceneSpec::uniform(2, 2, 1.0, 1.0, 0.0)
            .unwrap()
            .with_second_path(0.4, 1.5)
            .unwrap();
        for p in scene.points() {
            assert_eq!(p.paths().len(), 2);
            assert!((p.paths()[1].path_length - 3.5).abs() < 1e-12);
            assert!((p.paths()[1].amplitude - 0.4).abs() < 1e-12);
        }
        // Truth still reports the direct bounce.
        assert_eq!(scene.truth_map().depth()[0], 1.0);
    }

    #[test]
    fn slow_mode_cube_reconstructs() {
        let sweep = FrequencySweep::new(10e6, 1e9, 2048).unwrap();
        let scene = SceneSpec::uniform(2, 1, 1.5, 1.0, 0.0).unwrap();
        let mode = CaptureMode::SlowTof {
            sweep,
            exposure_s: 1e-3,
        };
        let cube = simulate_capture(&scene, &mode, &NoiseSpec::noiseless()).unwrap();
        let map = reconstruct(&cube, EstimatorKind::SlowTof).unwrap();
        assert_eq!(map.valid_count(), 2);
        for &d in map.depth() {
            assert!((d - 1.5).abs() < 0.05, "depth {d}");
        }
    }

    #[test]
    fn error_histogram_buckets_and_summary() {
        let h = ErrorHistogram::from_errors(vec![0.05, 0.3, 0.9, 1.5, 7.0, 50.0]).unwrap();
        assert_eq!(h.counts, vec![1, 1, 1, 1, 0, 1, 1]);
        assert!((h.fraction_within_1_percent - 0.5).abs() < 1e-12);
        assert!(ErrorHistogram::from_errors(vec![]).is_none());
    }

    #[test]
    fn degenerate_status_is_serializable() {
        let s = serde_json::to_string(&PeakStatus::Degenerate).unwrap();
        assert_eq!(s, "\"degenerate\"");
    }
}
