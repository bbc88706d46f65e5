//! `fdtof`: synthesize, estimate, and compare time-of-flight depth capture
//! architectures from the command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdtof::cli::{
    self, CompareConfig, EstimateConfig, MultipathSpec, PresetKind, ResolveConfig, SceneConfig,
    SceneSource, SlowTofConfig, SynthConfig, SynthMode,
};
use fdtof::scene_sim::{CaptureMode, EstimatorKind};
use fdtof::signal_model::FrequencySweep;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fdtof",
    version,
    about = "Time-of-flight depth sensing: phase-correlation, swept-frequency, and slow-camera pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize primal-domain signals for one or more objects (CSV out).
    Synth(SynthArgs),
    /// Estimate depth from a signal CSV (JSON out).
    Estimate(EstimateArgs),
    /// Monte Carlo SNR sweep comparing the architectures (CSV + JSON out).
    Compare(CompareArgs),
    /// Simulate and reconstruct a full scene (PGM + metrics JSON out).
    Scene(SceneArgs),
    /// Axial-resolution bound and empirical two-path merge threshold.
    Resolve(ResolveArgs),
    /// Integrating-camera demo: per-object depths and amplitude decay.
    Slowtof(SlowtofArgs),
    /// Re-execute a run from its *.config.json sidecar.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Resolved configuration written by a previous run.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Phase,
    Fd,
    Slow,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    /// Four-bucket phase recovery (phase-shift signals).
    FourBucket,
    /// Interpolated periodogram (swept-frequency signals).
    Interp,
    /// Iterative single-tone refinement (swept-frequency signals).
    Qf,
    /// Integrating-camera estimator (swept-frequency signals).
    Slow,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::FourBucket => EstimatorKind::FourBucket,
            EstimatorArg::Interp => EstimatorKind::InterpPeriodogram,
            EstimatorArg::Qf => EstimatorKind::QuinnFernandes,
            EstimatorArg::Slow => EstimatorKind::SlowTof,
        }
    }
}

/// Parse `f_min:f_max:n`, e.g. `1e7:1e9:256`.
fn parse_sweep(s: &str) -> Result<FrequencySweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected f_min:f_max:n, e.g. 1e7:1e9:256".into());
    }
    let f_min: f64 = parts[0].parse().map_err(|e| format!("bad f_min: {e}"))?;
    let f_max: f64 = parts[1].parse().map_err(|e| format!("bad f_max: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
    FrequencySweep::new(f_min, f_max, n).map_err(|e| e.to_string())
}

/// Parse `fraction:extra_path_m`, e.g. `0.3:1.5`.
fn parse_multipath(s: &str) -> Result<MultipathSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err("expected fraction:extra_path_m, e.g. 0.3:1.5".into());
    }
    Ok(MultipathSpec {
        fraction: parts[0].parse().map_err(|e| format!("bad fraction: {e}"))?,
        extra_path_m: parts[1].parse().map_err(|e| format!("bad extra path: {e}"))?,
    })
}

#[derive(Args)]
struct SynthArgs {
    /// Capture architecture to synthesize.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Object depths in meters, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    objects: Vec<f64>,
    /// Modulation frequency in Hz (phase mode).
    #[arg(long)]
    f_mod: Option<f64>,
    /// Correlation shifts per period (phase mode).
    #[arg(long, default_value_t = 64)]
    n_taus: usize,
    /// Frequency sweep as f_min:f_max:n (fd and slow modes).
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<FrequencySweep>,
    /// Exposure time in seconds (slow mode).
    #[arg(long)]
    exposure: Option<f64>,
    /// Per-path amplitude.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Ambient level.
    #[arg(long, default_value_t = 0.0)]
    ambient: f64,
    /// SNR in dB; omit for a noiseless synthesis.
    #[arg(long, requires = "seed")]
    snr: Option<f64>,
    /// Seed for the noise realization (mandatory for stochastic runs).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Signal CSV produced by `synth`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    estimator: EstimatorArg,
    /// Modulation frequency in Hz (four-bucket estimator).
    #[arg(long)]
    f_mod: Option<f64>,
    /// Exposure time in seconds (slow estimator).
    #[arg(long)]
    exposure: Option<f64>,
    /// Output JSON path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Object depth in meters.
    #[arg(long, default_value_t = 1.0)]
    depth: f64,
    /// SNR levels in dB, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 10.0, 20.0, 30.0])]
    snr: Vec<f64>,
    /// Monte Carlo trials per SNR level.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Modulation frequency of the phase-correlation arm, Hz.
    #[arg(long, default_value_t = 100e6)]
    f_mod: f64,
    /// Frequency sweep of the swept-frequency arm.
    #[arg(long, value_parser = parse_sweep, default_value = "1e7:1e9:256")]
    sweep: FrequencySweep,
    #[arg(long)]
    seed: u64,
    /// Output prefix for <prefix>.csv and <prefix>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SceneArgs {
    /// Procedural scene preset.
    #[arg(long, value_enum, conflicts_with_all = ["scene_json", "truth_pgm"])]
    preset: Option<PresetArg>,
    /// Scene description JSON.
    #[arg(long, conflicts_with = "truth_pgm")]
    scene_json: Option<PathBuf>,
    /// Ground-truth depth map PGM (16-bit, 1 level = 1 mm).
    #[arg(long)]
    truth_pgm: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Preset depth range as min:max in meters.
    #[arg(long, default_value = "0.5:3.0", value_parser = parse_depth_range)]
    depth_range: (f64, f64),
    /// Capture architecture.
    #[arg(long, value_enum, default_value_t = ModeArg::Fd)]
    mode: ModeArg,
    #[arg(long, value_parser = parse_sweep, default_value = "1e7:1e9:256")]
    sweep: FrequencySweep,
    #[arg(long)]
    f_mod: Option<f64>,
    #[arg(long)]
    exposure: Option<f64>,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Qf)]
    estimator: EstimatorArg,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    ambient: f64,
    /// Add a second return per pixel: fraction:extra_path_m.
    #[arg(long, value_parser = parse_multipath)]
    multipath: Option<MultipathSpec>,
    #[arg(long, requires = "seed")]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix for the PGM and metrics files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Uniform,
    Ramp,
    Sphere,
}

fn parse_depth_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err("expected min:max, e.g. 0.5:3.0".into());
    }
    Ok((
        parts[0].parse().map_err(|e| format!("bad min: {e}"))?,
        parts[1].parse().map_err(|e| format!("bad max: {e}"))?,
    ))
}

#[derive(Args)]
struct ResolveArgs {
    #[arg(long, value_parser = parse_sweep)]
    sweep: FrequencySweep,
    /// Path length of the nearer return in the merge scan, meters.
    #[arg(long)]
    base_path: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SlowtofArgs {
    /// Object depths in meters, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    objects: Vec<f64>,
    #[arg(long, value_parser = parse_sweep, default_value = "1e7:1e9:4096")]
    sweep: FrequencySweep,
    /// Exposure time in seconds.
    #[arg(long)]
    exposure: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    ambient: f64,
    #[arg(long, requires = "seed")]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> fdtof::Result<Option<String>> {
    match cli.command {
        Command::Synth(a) => {
            let mode = match a.mode {
                ModeArg::Phase => SynthMode::Phase {
                    f_mod_hz: a
                        .f_mod
                        .ok_or_else(|| fdtof::Error::InvalidArgument("--f-mod is required for phase mode".into()))?,
                    n_taus: a.n_taus,
                },
                ModeArg::Fd => SynthMode::Fd {
                    sweep: a.sweep.ok_or_else(|| {
                        fdtof::Error::InvalidArgument("--sweep is required for fd mode".into())
                    })?,
                },
                ModeArg::Slow => SynthMode::Slow {
                    sweep: a.sweep.ok_or_else(|| {
                        fdtof::Error::InvalidArgument("--sweep is required for slow mode".into())
                    })?,
                    exposure_s: a.exposure.ok_or_else(|| {
                        fdtof::Error::InvalidArgument("--exposure is required for slow mode".into())
                    })?,
                },
            };
            cli::cmd_synth(&SynthConfig {
                mode,
                object_depths_m: a.objects,
                amplitude: a.amplitude,
                ambient: a.ambient,
                snr_db: a.snr,
                seed: a.seed.unwrap_or(0),
                out: a.out,
            })?;
            Ok(None)
        }
        Command::Estimate(a) => {
            let json = cli::cmd_estimate(&EstimateConfig {
                input: a.input,
                estimator: a.estimator.into(),
                f_mod_hz: a.f_mod,
                exposure_s: a.exposure,
                out: a.out.clone(),
            })?;
            Ok(if a.out.is_none() { Some(json) } else { None })
        }
        Command::Compare(a) => {
            cli::cmd_compare(&CompareConfig {
                depth_m: a.depth,
                snr_db_levels: a.snr,
                trials: a.trials,
                phase_f_mod_hz: a.f_mod,
                sweep: a.sweep,
                seed: a.seed,
                out_prefix: a.out,
            })?;
            Ok(None)
        }
        Command::Scene(a) => {
            let source = if let Some(path) = a.scene_json {
                SceneSource::SceneJson { path }
            } else if let Some(path) = a.truth_pgm {
                SceneSource::TruthPgm { path }
            } else {
                let preset = match a.preset.unwrap_or(PresetArg::Ramp) {
                    PresetArg::Uniform => PresetKind::Uniform,
                    PresetArg::Ramp => PresetKind::Ramp,
                    PresetArg::Sphere => PresetKind::Sphere,
                };
                SceneSource::Preset {
                    preset,
                    width: a.width,
                    height: a.height,
                    depth_min_m: a.depth_range.0,
                    depth_max_m: a.depth_range.1,
                }
            };
            let capture = match a.mode {
                ModeArg::Fd => CaptureMode::FdTof { sweep: a.sweep },
                ModeArg::Phase => CaptureMode::PhaseTof {
                    f_mod_hz: a.f_mod.ok_or_else(|| {
                        fdtof::Error::InvalidArgument("--f-mod is required for phase mode".into())
                    })?,
                },
                ModeArg::Slow => CaptureMode::SlowTof {
                    sweep: a.sweep,
                    exposure_s: a.exposure.ok_or_else(|| {
                        fdtof::Error::InvalidArgument("--exposure is required for slow mode".into())
                    })?,
                },
            };
            cli::cmd_scene(&SceneConfig {
                source,
                capture,
                estimator: a.estimator.into(),
                amplitude: a.amplitude,
                ambient: a.ambient,
                multipath: a.multipath,
                snr_db: a.snr,
                seed: a.seed.unwrap_or(0),
                out_prefix: a.out,
            })?;
            Ok(None)
        }
        Command::Resolve(a) => {
            cli::cmd_resolve(&ResolveConfig {
                sweep: a.sweep,
                base_path_m: a.base_path,
                out: a.out,
            })?;
            Ok(None)
        }
        Command::Run(a) => cli::cmd_run(&a.config),
        Command::Slowtof(a) => {
            cli::cmd_slowtof(&SlowTofConfig {
                object_depths_m: a.objects,
                sweep: a.sweep,
                exposure_s: a.exposure,
                amplitude: a.amplitude,
                ambient: a.ambient,
                snr_db: a.snr,
                seed: a.seed.unwrap_or(0),
                out: a.out,
            })?;
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let is_estimate = matches!(cli.command, Command::Estimate(_));
    match run(cli) {
        Ok(Some(stdout_doc)) => {
            // A closed pipe (e.g. `fdtof ... | head`) is not worth a panic,
            // but an unwritten result document is still a failed run.
            let mut out = std::io::stdout();
            match writeln!(out, "{stdout_doc}").and_then(|()| out.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(_) => ExitCode::FAILURE,
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            if is_estimate {
                // Structured error document for machine consumers.
                let _ = writeln!(std::io::stdout(), "{}", cli::error_json(&e));
            }
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
