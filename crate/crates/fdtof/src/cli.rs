//! Command implementations and file formats behind the `fdtof` binary.
//!
//! Signals travel as CSV (`coordinate,sample,object_id` with units in the
//! header), structured results and configs as JSON, depth/amplitude maps as
//! 16-bit PGM. Every command is deterministic given its resolved
//! configuration, which is serialized alongside the outputs as a
//! `*.config.json` sidecar. Output files are written atomically
//! (write-temp-then-rename).

use crate::error::{Error, Result};
use crate::freq_domain::{axial_resolution, estimate_tone_interp, estimate_tone_qf, PeakStatus};
use crate::pgm;
use crate::phase_tof::{four_bucket, phase_to_depth};
use crate::scene_sim::{
    merge_threshold_experiment, percent_errors, psnr, reconstruct, simulate_capture, CaptureMode,
    ErrorHistogram, EstimatorKind, ExperimentReport, SceneSpec,
};
use crate::signal_model::{
    add_noise, synth_fd_sweep, synth_phase_correlation, synth_slow_sweep, DomainKind,
    FrequencySweep, NoiseSpec, PrimalSignal, ScenePoint,
};
use crate::slow_tof::{estimate_depth_slow, verify_amplitude_decay, SlowCaptureConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// A fully resolved command configuration. This is exactly what the
/// `*.config.json` sidecars hold, so any past run can be repeated with
/// `fdtof run --config <sidecar>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Synth(SynthConfig),
    Estimate(EstimateConfig),
    Compare(CompareConfig),
    Scene(SceneConfig),
    Resolve(ResolveConfig),
    Slowtof(SlowTofConfig),
}

/// Execute any resolved configuration. Returns the document a command wants
/// printed to stdout, if any.
pub fn run_config(config: &RunConfig) -> Result<Option<String>> {
    match config {
        RunConfig::Synth(c) => cmd_synth(c).map(|()| None),
        RunConfig::Estimate(c) => {
            let json = cmd_estimate(c)?;
            Ok(c.out.is_none().then_some(json))
        }
        RunConfig::Compare(c) => cmd_compare(c).map(|()| None),
        RunConfig::Scene(c) => cmd_scene(c).map(|()| None),
        RunConfig::Resolve(c) => cmd_resolve(c).map(|()| None),
        RunConfig::Slowtof(c) => cmd_slowtof(c).map(|()| None),
    }
}

/// Load a sidecar (or hand-written) config file and execute it.
pub fn cmd_run(path: &Path) -> Result<Option<String>> {
    let config: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    run_config(&config)
}

/// Write `bytes` to `path` atomically: write a sibling temp file, then
/// rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("output path {} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Sidecar path holding the resolved run configuration: `out.csv` becomes
/// `out.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.config.json"))
}

fn write_sidecar(out: &Path, config: &RunConfig) -> Result<()> {
    let json = serde_json::to_vec_pretty(config)?;
    write_atomic(&sidecar_path(out), &json)
}

/// Structured error document emitted on command failure.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

fn noise_spec(snr_db: Option<f64>, seed: u64) -> NoiseSpec {
    match snr_db {
        Some(snr) => NoiseSpec::new(snr, seed),
        None => NoiseSpec::noiseless(),
    }
}

fn status_label(status: PeakStatus) -> &'static str {
    match status {
        PeakStatus::Ok => "ok",
        PeakStatus::NotConverged => "not_converged",
        PeakStatus::Degenerate => "degenerate",
        PeakStatus::ExposureToneOutOfBand => "exposure_tone_out_of_band",
    }
}

// ---------------------------------------------------------------------------
// Signal CSV format
// ---------------------------------------------------------------------------

const PHASE_HEADER: &str = "tau_s,sample,object_id";
const SWEEP_HEADER: &str = "f_mod_hz,sample,object_id";

/// Serialize per-object signals as CSV. All signals must share one domain.
pub fn signals_to_csv(signals: &[(u32, PrimalSignal)]) -> Result<String> {
    let first = signals
        .first()
        .ok_or_else(|| Error::invalid("no signals to write"))?;
    let domain = first.1.domain();
    if signals.iter().any(|(_, s)| s.domain() != domain) {
        return Err(Error::invalid("all signals in one file must share a domain"));
    }
    let mut out = String::new();
    out.push_str(match domain {
        DomainKind::PhaseShift => PHASE_HEADER,
        DomainKind::ModulationFrequency => SWEEP_HEADER,
    });
    out.push('\n');
    for (id, sig) in signals {
        for (c, s) in sig.coordinates().iter().zip(sig.samples()) {
            writeln!(out, "{c},{s},{id}").expect("string write cannot fail");
        }
    }
    Ok(out)
}

/// Parse a signal CSV produced by [`signals_to_csv`]; objects come back in
/// first-appearance order. Parse failures report the 1-based line number as
/// the offset.
pub fn signals_from_csv(text: &str) -> Result<Vec<(u32, PrimalSignal)>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            offset: 1,
            message: "empty signal file".into(),
        })?;
    let domain = match header.trim() {
        PHASE_HEADER => DomainKind::PhaseShift,
        SWEEP_HEADER => DomainKind::ModulationFrequency,
        other => {
            return Err(Error::Parse {
                offset: 1,
                message: format!(
                    "unrecognized header {other:?}; expected {PHASE_HEADER:?} or {SWEEP_HEADER:?}"
                ),
            })
        }
    };

    let mut order: Vec<u32> = Vec::new();
    let mut grouped: std::collections::BTreeMap<u32, (Vec<f64>, Vec<f64>)> = Default::default();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next_field = |what: &str| {
            fields.next().ok_or_else(|| Error::Parse {
                offset: line_no,
                message: format!("missing {what} column"),
            })
        };
        let coord: f64 = next_field("coordinate")?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                offset: line_no,
                message: format!("bad coordinate: {e}"),
            })?;
        let sample: f64 = next_field("sample")?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                offset: line_no,
                message: format!("bad sample: {e}"),
            })?;
        let id: u32 = next_field("object_id")?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                offset: line_no,
                message: format!("bad object_id: {e}"),
            })?;
        let entry = grouped.entry(id).or_insert_with(|| {
            order.push(id);
            Default::default()
        });
        entry.0.push(coord);
        entry.1.push(sample);
    }
    order
        .into_iter()
        .map(|id| {
            let (coords, samples) = grouped.remove(&id).expect("id was inserted");
            Ok((id, PrimalSignal::new(domain, coords, samples)?))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Synthesis mode for `synth` and `estimate` style commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SynthMode {
    /// Correlation samples over one period of τ.
    Phase { f_mod_hz: f64, n_taus: usize },
    Fd { sweep: FrequencySweep },
    Slow {
        sweep: FrequencySweep,
        exposure_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(flatten)]
    pub mode: SynthMode,
    pub object_depths_m: Vec<f64>,
    pub amplitude: f64,
    pub ambient: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Synthesize primal-domain signals for each configured object and write
/// them as one CSV (plus the config sidecar).
pub fn cmd_synth(cfg: &SynthConfig) -> Result<()> {
    if cfg.object_depths_m.is_empty() {
        return Err(Error::invalid("at least one object depth is required"));
    }
    let mut signals = Vec::with_capacity(cfg.object_depths_m.len());
    for (idx, &depth) in cfg.object_depths_m.iter().enumerate() {
        let id = idx as u32;
        let point = ScenePoint::from_depth(depth, cfg.amplitude, cfg.ambient)?;
        let clean = match &cfg.mode {
            SynthMode::Phase { f_mod_hz, n_taus } => {
                if *n_taus < 2 {
                    return Err(Error::invalid("phase synthesis needs at least 2 shifts"));
                }
                let period = 1.0 / f_mod_hz;
                let taus: Vec<f64> = (0..*n_taus)
                    .map(|k| k as f64 * period / *n_taus as f64)
                    .collect();
                synth_phase_correlation(&point, *f_mod_hz, &taus)?
            }
            SynthMode::Fd { sweep } => synth_fd_sweep(&point, sweep),
            SynthMode::Slow { sweep, exposure_s } => {
                synth_slow_sweep(&point, sweep, *exposure_s)?
            }
        };
        let noise = noise_spec(cfg.snr_db, crate::scene_sim::mix_pixel_seed(cfg.seed, id, 0));
        signals.push((id, add_noise(&clean, &noise)?));
    }
    let csv = signals_to_csv(&signals)?;
    write_atomic(&cfg.out, csv.as_bytes())?;
    write_sidecar(&cfg.out, &RunConfig::Synth(cfg.clone()))
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub input: PathBuf,
    pub estimator: EstimatorKind,
    /// Required by the four-bucket estimator.
    pub f_mod_hz: Option<f64>,
    /// Required by the integrating-camera estimator.
    pub exposure_s: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObjectEstimate {
    pub object_id: u32,
    pub depth_m: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_quality: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateDoc {
    pub command: &'static str,
    pub config: EstimateConfig,
    pub results: Vec<ObjectEstimate>,
}

/// Run the chosen estimator over every object in a signal CSV. Returns the
/// pretty-printed result document; also writes it to `cfg.out` when set.
pub fn cmd_estimate(cfg: &EstimateConfig) -> Result<String> {
    let text = fs::read_to_string(&cfg.input)?;
    let signals = signals_from_csv(&text)?;
    if signals.is_empty() {
        return Err(Error::invalid("signal file contains no data rows"));
    }

    let mut results = Vec::with_capacity(signals.len());
    for (id, sig) in &signals {
        let est = match cfg.estimator {
            EstimatorKind::FourBucket => estimate_four_bucket_signal(sig, cfg)?,
            EstimatorKind::InterpPeriodogram => {
                let p = estimate_tone_interp(sig)?;
                ObjectEstimate {
                    object_id: *id,
                    depth_m: p.depth,
                    amplitude: p.amplitude,
                    confidence: None,
                    peak_quality: Some(p.peak_quality),
                    status: status_label(p.status).into(),
                }
            }
            EstimatorKind::QuinnFernandes => {
                let p = estimate_tone_qf(sig, None)?;
                ObjectEstimate {
                    object_id: *id,
                    depth_m: p.depth,
                    amplitude: p.amplitude,
                    confidence: None,
                    peak_quality: Some(p.peak_quality),
                    status: status_label(p.status).into(),
                }
            }
            EstimatorKind::SlowTof => {
                let exposure = cfg.exposure_s.ok_or_else(|| {
                    Error::invalid("--exposure is required for the slow estimator")
                })?;
                let coords = sig.coordinates();
                let sweep =
                    FrequencySweep::new(coords[0], coords[coords.len() - 1], coords.len())?;
                let p = estimate_depth_slow(sig, &SlowCaptureConfig::new(exposure, sweep)?)?;
                ObjectEstimate {
                    object_id: *id,
                    depth_m: p.depth,
                    amplitude: p.amplitude,
                    confidence: None,
                    peak_quality: Some(p.peak_quality),
                    status: status_label(p.status).into(),
                }
            }
        };
        let est = ObjectEstimate {
            object_id: *id,
            ..est
        };
        results.push(est);
    }

    let doc = EstimateDoc {
        command: "estimate",
        config: cfg.clone(),
        results,
    };
    let json = serde_json::to_string_pretty(&doc)?;
    if let Some(out) = &cfg.out {
        write_atomic(out, json.as_bytes())?;
        write_sidecar(out, &RunConfig::Estimate(cfg.clone()))?;
    }
    Ok(json)
}

fn estimate_four_bucket_signal(sig: &PrimalSignal, cfg: &EstimateConfig) -> Result<ObjectEstimate> {
    let f_mod = cfg
        .f_mod_hz
        .ok_or_else(|| Error::invalid("--f-mod is required for the four-bucket estimator"))?;
    if sig.domain() != DomainKind::PhaseShift {
        return Err(Error::invalid(
            "four-bucket estimation requires a phase-shift signal",
        ));
    }
    let n = sig.len();
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "four-bucket estimation needs a multiple of 4 samples over one period, got {n}"
        )));
    }
    // Pick the four quarter-period buckets and confirm the grid matches the
    // stated modulation frequency.
    let period = 1.0 / f_mod;
    let idx = [0, n / 4, n / 2, 3 * n / 4];
    for (j, &i) in idx.iter().enumerate() {
        let expected = j as f64 * period / 4.0;
        let got = sig.coordinates()[i] - sig.coordinates()[0];
        if (got - expected).abs() > 1e-6 * period {
            return Err(Error::invalid(format!(
                "correlation shifts do not match one period of {f_mod} Hz \
                 (bucket {j} at {got} s, expected {expected} s)"
            )));
        }
    }
    let s = sig.samples();
    let ph = four_bucket(s[idx[0]], s[idx[1]], s[idx[2]], s[idx[3]])?;
    let d = phase_to_depth(&ph, f_mod)?;
    Ok(ObjectEstimate {
        object_id: 0,
        depth_m: d.depth,
        amplitude: d.amplitude,
        confidence: Some(d.confidence),
        peak_quality: None,
        status: if ph.is_degenerate() { "degenerate" } else { "ok" }.into(),
    })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub depth_m: f64,
    pub snr_db_levels: Vec<f64>,
    pub trials: usize,
    pub phase_f_mod_hz: f64,
    pub sweep: FrequencySweep,
    pub seed: u64,
    /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written.
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct CompareDoc<'a> {
    command: &'static str,
    config: &'a CompareConfig,
    report: &'a ExperimentReport,
}

/// Monte Carlo SNR sweep comparing the architectures; writes the report as
/// CSV and JSON.
pub fn cmd_compare(cfg: &CompareConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::invalid("--trials must be at least 1"));
    }
    let report = crate::scene_sim::snr_sweep_experiment(
        cfg.depth_m,
        &cfg.snr_db_levels,
        cfg.trials,
        cfg.phase_f_mod_hz,
        &cfg.sweep,
        cfg.seed,
    )?;

    let mut csv = String::from(
        "estimator,snr_db,trials,median_percent_error,mean_percent_error,rmse_m,psnr_db\n",
    );
    for row in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.estimator,
            row.snr_db,
            row.trials,
            row.median_percent_error,
            row.mean_percent_error,
            row.rmse_m,
            row.psnr_db.map(|p| p.to_string()).unwrap_or_default()
        )
        .expect("string write cannot fail");
    }
    let csv_path = cfg.out_prefix.with_extension("csv");
    let json_path = cfg.out_prefix.with_extension("json");
    write_atomic(&csv_path, csv.as_bytes())?;
    let doc = CompareDoc {
        command: "compare",
        config: cfg,
        report: &report,
    };
    write_atomic(&json_path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    write_sidecar(&json_path, &RunConfig::Compare(cfg.clone()))
}

// ---------------------------------------------------------------------------
// scene
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Uniform,
    Ramp,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    Preset {
        preset: PresetKind,
        width: usize,
        height: usize,
        depth_min_m: f64,
        depth_max_m: f64,
    },
    SceneJson {
        path: PathBuf,
    },
    TruthPgm {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathSpec {
    pub fraction: f64,
    pub extra_path_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub source: SceneSource,
    #[serde(flatten)]
    pub capture: CaptureMode,
    pub estimator: EstimatorKind,
    pub amplitude: f64,
    pub ambient: f64,
    pub multipath: Option<MultipathSpec>,
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Output prefix; `<prefix>_depth.pgm`, `<prefix>_amplitude.pgm`,
    /// `<prefix>_truth.pgm` and `<prefix>_metrics.json` are written.
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct SceneMetrics {
    psnr_db: Option<f64>,
    psnr_is_infinite: bool,
    valid_pixels: usize,
    invalid_pixels: usize,
    total_pixels: usize,
    percent_error_histogram: Option<ErrorHistogram>,
}

fn load_scene(cfg: &SceneConfig) -> Result<SceneSpec> {
    let scene = match &cfg.source {
        SceneSource::Preset {
            preset,
            width,
            height,
            depth_min_m,
            depth_max_m,
        } => match preset {
            PresetKind::Uniform => {
                SceneSpec::uniform(*width, *height, *depth_min_m, cfg.amplitude, cfg.ambient)?
            }
            PresetKind::Ramp => SceneSpec::ramp(
                *width,
                *height,
                *depth_min_m,
                *depth_max_m,
                cfg.amplitude,
                cfg.ambient,
            )?,
            PresetKind::Sphere => SceneSpec::sphere(
                *width,
                *height,
                *depth_max_m,
                *depth_min_m,
                0.4,
                cfg.amplitude,
                cfg.ambient,
            )?,
        },
        SceneSource::SceneJson { path } => serde_json::from_str(&fs::read_to_string(path)?)?,
        SceneSource::TruthPgm { path } => {
            let truth = pgm::decode_depth_pgm(&fs::read(path)?)?;
            let points: Vec<ScenePoint> = truth
                .depth()
                .iter()
                .zip(truth.valid())
                .map(|(&d, &ok)| {
                    if !ok {
                        return Err(Error::invalid(
                            "ground-truth PGM contains invalid pixels; fill them before simulating",
                        ));
                    }
                    ScenePoint::from_depth(d, cfg.amplitude, cfg.ambient)
                })
                .collect::<Result<_>>()?;
            SceneSpec::new(truth.width(), truth.height(), points)?
        }
    };
    match cfg.multipath {
        Some(mp) => scene.with_second_path(mp.fraction, mp.extra_path_m),
        None => Ok(scene),
    }
}

/// Simulate, reconstruct, and score a scene; writes depth/amplitude/truth
/// PGMs and a metrics JSON.
pub fn cmd_scene(cfg: &SceneConfig) -> Result<()> {
    let scene = load_scene(cfg)?;
    let truth = scene.truth_map();
    let noise = noise_spec(cfg.snr_db, cfg.seed);
    let cube = simulate_capture(&scene, &cfg.capture, &noise)?;
    let map = reconstruct(&cube, cfg.estimator)?;

    let prefix = cfg.out_prefix.to_string_lossy();
    let depth_path = PathBuf::from(format!("{prefix}_depth.pgm"));
    let amp_path = PathBuf::from(format!("{prefix}_amplitude.pgm"));
    let truth_path = PathBuf::from(format!("{prefix}_truth.pgm"));
    let metrics_path = PathBuf::from(format!("{prefix}_metrics.json"));

    write_atomic(&depth_path, &pgm::encode_depth_pgm(&map)?)?;
    write_atomic(&amp_path, &pgm::encode_amplitude_pgm(&map)?)?;
    write_atomic(&truth_path, &pgm::encode_depth_pgm(&truth)?)?;

    let p = psnr(&map, &truth)?;
    let metrics = SceneMetrics {
        psnr_db: p.is_finite().then_some(p),
        psnr_is_infinite: p.is_infinite(),
        valid_pixels: map.valid_count(),
        invalid_pixels: map.depth().len() - map.valid_count(),
        total_pixels: map.depth().len(),
        percent_error_histogram: ErrorHistogram::from_errors(percent_errors(&map, &truth)),
    };
    write_atomic(
        &metrics_path,
        serde_json::to_string_pretty(&metrics)?.as_bytes(),
    )?;
    write_sidecar(&metrics_path, &RunConfig::Scene(cfg.clone()))
}

// ---------------------------------------------------------------------------
// resolve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveConfig {
    pub sweep: FrequencySweep,
    /// Path length of the nearer return in the two-path merge scan.
    pub base_path_m: Option<f64>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct ResolveDoc<'a> {
    command: &'static str,
    config: &'a ResolveConfig,
    axial_resolution_bound_m: f64,
    empirical_merge_threshold_m: f64,
    empirical_over_bound: f64,
}

/// Report the analytic axial-resolution bound of a sweep next to the
/// empirically measured two-path merge threshold.
pub fn cmd_resolve(cfg: &ResolveConfig) -> Result<()> {
    let bound = axial_resolution(&cfg.sweep);
    // Default base path: comfortably inside the cycle guard and scaled to
    // the bound so the scan stays in band for any sweep.
    let base = cfg
        .base_path_m
        .unwrap_or_else(|| (2.0 * crate::SPEED_OF_LIGHT / cfg.sweep.bandwidth()).max(bound));
    let empirical = merge_threshold_experiment(&cfg.sweep, base)?;
    let doc = ResolveDoc {
        command: "resolve",
        config: cfg,
        axial_resolution_bound_m: bound,
        empirical_merge_threshold_m: empirical,
        empirical_over_bound: empirical / bound,
    };
    write_atomic(&cfg.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    write_sidecar(&cfg.out, &RunConfig::Resolve(cfg.clone()))
}

// ---------------------------------------------------------------------------
// slowtof
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowTofConfig {
    pub object_depths_m: Vec<f64>,
    pub sweep: FrequencySweep,
    pub exposure_s: f64,
    pub amplitude: f64,
    pub ambient: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct SlowObjectResult {
    object_id: u32,
    true_depth_m: f64,
    estimated_depth_m: f64,
    amplitude: f64,
    status: String,
    /// Log-log slope of the noiseless record's amplitude envelope
    /// (expected near −1 for an integrating camera).
    decay_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SlowTofDoc<'a> {
    command: &'static str,
    config: &'a SlowTofConfig,
    results: Vec<SlowObjectResult>,
}

/// Integrating-camera demonstration: synthesize, estimate each object's
/// depth, and fit the amplitude-decay exponent.
pub fn cmd_slowtof(cfg: &SlowTofConfig) -> Result<()> {
    if cfg.object_depths_m.is_empty() {
        return Err(Error::invalid("at least one object depth is required"));
    }
    let capture = SlowCaptureConfig::new(cfg.exposure_s, cfg.sweep)?;
    let mut results = Vec::new();
    for (idx, &depth) in cfg.object_depths_m.iter().enumerate() {
        let id = idx as u32;
        let point = ScenePoint::from_depth(depth, cfg.amplitude, cfg.ambient)?;
        let clean = synth_slow_sweep(&point, &cfg.sweep, cfg.exposure_s)?;
        // The decay fit is defined on the noiseless record.
        let decay = verify_amplitude_decay(&clean)?;
        let noise = noise_spec(cfg.snr_db, crate::scene_sim::mix_pixel_seed(cfg.seed, id, 0));
        let noisy = add_noise(&clean, &noise)?;
        let est = estimate_depth_slow(&noisy, &capture)?;
        results.push(SlowObjectResult {
            object_id: id,
            true_depth_m: depth,
            estimated_depth_m: est.depth,
            amplitude: est.amplitude,
            status: status_label(est.status).into(),
            decay_exponent: decay,
        });
    }
    let doc = SlowTofDoc {
        command: "slowtof",
        config: cfg,
        results,
    };
    write_atomic(&cfg.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    write_sidecar(&cfg.out, &RunConfig::Slowtof(cfg.clone()))
}
