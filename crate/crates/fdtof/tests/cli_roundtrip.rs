//! End-to-end tests of the `fdtof` binary: synth/estimate round trips per
//! capture mode, determinism of outputs, usage errors, and file formats.

use std::path::Path;
use std::process::{Command, Output};

fn fdtof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdtof"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn estimate_depths(json: &str) -> Vec<f64> {
    let doc: serde_json::Value = serde_json::from_str(json).expect("valid JSON");
    doc["results"]
        .as_array()
        .expect("results array")
        .iter()
        .map(|r| r["depth_m"].as_f64().expect("depth_m"))
        .collect()
}

#[test]
fn synth_fd_writes_csv_with_cycle_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("signals.csv");
    let run = fdtof(&[
        "synth",
        "--mode",
        "fd",
        "--objects",
        "1,2,3",
        "--sweep",
        "1e7:1e9:256",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&run);

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "f_mod_hz,sample,object_id");

    // Count mean-crossings per object id.
    let mut per_object: std::collections::BTreeMap<u32, Vec<f64>> = Default::default();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        per_object
            .entry(f[2].parse().unwrap())
            .or_default()
            .push(f[1].parse().unwrap());
    }
    assert_eq!(per_object.len(), 3);
    let crossings: Vec<f64> = per_object
        .values()
        .map(|v| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.windows(2).filter(|w| (w[0] - m) * (w[1] - m) < 0.0).count() as f64
        })
        .collect();
    assert!((crossings[1] / crossings[0] - 2.0).abs() < 0.1, "{crossings:?}");
    assert!((crossings[2] / crossings[0] - 3.0).abs() < 0.15, "{crossings:?}");

    // Resolved config sidecar sits next to the output.
    assert!(dir.path().join("signals.config.json").exists());
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for (out, seed) in [(&out_a, "9"), (&out_b, "9")] {
        assert_success(&fdtof(&[
            "synth",
            "--mode",
            "fd",
            "--objects",
            "1.5",
            "--sweep",
            "1e7:1e9:128",
            "--snr",
            "15",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
}

#[test]
fn synth_requires_objects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let run = fdtof(&[
        "synth",
        "--mode",
        "fd",
        "--sweep",
        "1e7:1e9:64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!run.status.success());
}

#[test]
fn synth_estimate_round_trip_phase() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("phase.csv");
    assert_success(&fdtof(&[
        "synth",
        "--mode",
        "phase",
        "--objects",
        "1.0",
        "--f-mod",
        "5e7",
        "--n-taus",
        "64",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let run = fdtof(&[
        "estimate",
        "--input",
        csv.to_str().unwrap(),
        "--estimator",
        "four-bucket",
        "--f-mod",
        "5e7",
    ]);
    assert_success(&run);
    let depths = estimate_depths(&String::from_utf8_lossy(&run.stdout));
    assert_eq!(depths.len(), 1);
    assert!((depths[0] - 1.0).abs() < 1e-6, "{depths:?}");
}

#[test]
fn synth_estimate_round_trip_fd() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fd.csv");
    let json = dir.path().join("est.json");
    assert_success(&fdtof(&[
        "synth",
        "--mode",
        "fd",
        "--objects",
        "1,2,3",
        "--sweep",
        "1e7:1e9:256",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let run = fdtof(&[
        "estimate",
        "--input",
        csv.to_str().unwrap(),
        "--estimator",
        "qf",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_success(&run);
    let depths = estimate_depths(&std::fs::read_to_string(&json).unwrap());
    for (d, expect) in depths.iter().zip([1.0, 2.0, 3.0]) {
        assert!((d - expect).abs() < 1e-3, "{depths:?}");
    }
}

#[test]
fn synth_estimate_round_trip_slow() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("slow.csv");
    assert_success(&fdtof(&[
        "synth",
        "--mode",
        "slow",
        "--objects",
        "2.0",
        "--sweep",
        "1e7:1e9:4096",
        "--exposure",
        "1e-3",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let run = fdtof(&[
        "estimate",
        "--input",
        csv.to_str().unwrap(),
        "--estimator",
        "slow",
        "--exposure",
        "1e-3",
    ]);
    assert_success(&run);
    let depths = estimate_depths(&String::from_utf8_lossy(&run.stdout));
    assert!((depths[0] - 2.0).abs() < 0.05, "{depths:?}");
}

#[test]
fn estimate_guard_violation_emits_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("narrow.csv");
    // 10..30 MHz sweep of a 1 m object: far below one primal-domain cycle.
    assert_success(&fdtof(&[
        "synth",
        "--mode",
        "fd",
        "--objects",
        "1.0",
        "--sweep",
        "1e7:3e7:64",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let run = fdtof(&[
        "estimate",
        "--input",
        csv.to_str().unwrap(),
        "--estimator",
        "interp",
    ]);
    assert!(!run.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&run.stdout).trim()).expect("error JSON");
    assert_eq!(doc["error"]["kind"], "insufficient_bandwidth");
}

#[test]
fn compare_rejects_zero_trials_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("report");
    let bad = fdtof(&[
        "compare",
        "--trials",
        "0",
        "--seed",
        "1",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(!bad.status.success());

    let run = fdtof(&[
        "compare",
        "--depth",
        "1.0",
        "--snr",
        "10,30",
        "--trials",
        "50",
        "--sweep",
        "1e7:1e9:128",
        "--seed",
        "3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_success(&run);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("estimator,snr_db,trials,median_percent_error"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3, "header + 2 levels x 3 estimators");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["report"]["rows"].as_array().unwrap().len(), 6);
    assert!(dir.path().join("report.config.json").exists());
}

#[test]
fn scene_uniform_identity_and_pgm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("scene");
    let run = fdtof(&[
        "scene",
        "--preset",
        "uniform",
        "--width",
        "8",
        "--height",
        "8",
        "--depth-range",
        "1.0:1.0",
        "--sweep",
        "1e7:1e9:256",
        "--estimator",
        "qf",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_success(&run);
    let metrics: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("scene_metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(metrics["valid_pixels"], 64);
    assert_eq!(
        metrics["percent_error_histogram"]["fraction_within_1_percent"],
        1.0
    );

    // Feed the emitted truth map back in as a ground-truth PGM source.
    let truth_pgm = dir.path().join("scene_truth.pgm");
    assert!(truth_pgm.exists());
    let prefix2 = dir.path().join("again");
    assert_success(&fdtof(&[
        "scene",
        "--truth-pgm",
        truth_pgm.to_str().unwrap(),
        "--sweep",
        "1e7:1e9:256",
        "--estimator",
        "qf",
        "--out",
        prefix2.to_str().unwrap(),
    ]));
    let truth_a = std::fs::read(&truth_pgm).unwrap();
    let truth_b = std::fs::read(dir.path().join("again_truth.pgm")).unwrap();
    assert_eq!(truth_a, truth_b, "PGM write -> read -> write is lossless");
}

#[test]
fn scene_ramp_at_20db_hits_the_error_budget() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("ramp");
    assert_success(&fdtof(&[
        "scene",
        "--preset",
        "ramp",
        "--width",
        "64",
        "--height",
        "64",
        "--depth-range",
        "0.5:3.0",
        "--sweep",
        "1e7:1e9:256",
        "--estimator",
        "qf",
        "--snr",
        "20",
        "--seed",
        "42",
        "--out",
        prefix.to_str().unwrap(),
    ]));
    let metrics: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("ramp_metrics.json")).unwrap(),
    )
    .unwrap();
    let frac = metrics["percent_error_histogram"]["fraction_within_1_percent"]
        .as_f64()
        .unwrap();
    assert!(frac >= 0.99, "fraction within 1%: {frac}");
    assert!(metrics["psnr_db"].as_f64().unwrap() > 20.0);
}

#[test]
fn resolve_reports_bound_and_empirical_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res.json");
    // Zero bandwidth is rejected at argument parse time.
    let bad = fdtof(&["resolve", "--sweep", "1e8:1e8:64", "--out", out.to_str().unwrap()]);
    assert!(!bad.status.success());

    assert_success(&fdtof(&[
        "resolve",
        "--sweep",
        "5e7:1.5e8:256",
        "--out",
        out.to_str().unwrap(),
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let bound = doc["axial_resolution_bound_m"].as_f64().unwrap();
    let empirical = doc["empirical_merge_threshold_m"].as_f64().unwrap();
    assert!((bound - 3.6).abs() < 0.05);
    assert!((empirical - bound).abs() <= 0.2 * bound);
}

#[test]
fn slowtof_reports_depths_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slow.json");
    assert_success(&fdtof(&[
        "slowtof",
        "--objects",
        "1,2,3",
        "--sweep",
        "1e7:1e9:4096",
        "--exposure",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for (r, expect) in results.iter().zip([1.0, 2.0, 3.0]) {
        let d = r["estimated_depth_m"].as_f64().unwrap();
        assert!((d - expect).abs() < 0.05, "expected {expect}, got {d}");
        let decay = r["decay_exponent"].as_f64().unwrap();
        assert!((decay + 1.0).abs() < 0.05, "decay {decay}");
    }
}

#[test]
fn config_sidecars_reproduce_runs() {
    // The sidecar is the full resolved configuration; `run --config` must
    // repeat the run and regenerate byte-identical output.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sig.csv");
    assert_success(&fdtof(&[
        "synth",
        "--mode",
        "slow",
        "--objects",
        "1.0",
        "--sweep",
        "1e7:1e9:512",
        "--exposure",
        "2e-3",
        "--snr",
        "25",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]));
    let sidecar_path = dir.path().join("sig.config.json");
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar_path).unwrap()).unwrap();
    assert_eq!(sidecar["command"], "synth");
    assert_eq!(sidecar["mode"], "slow");
    assert_eq!(sidecar["exposure_s"], 2e-3);
    assert_eq!(sidecar["seed"], 5);
    assert_eq!(sidecar["snr_db"], 25.0);
    assert!(Path::new(sidecar["out"].as_str().unwrap()).ends_with("sig.csv"));

    let first = std::fs::read(&out).unwrap();
    std::fs::remove_file(&out).unwrap();
    assert_success(&fdtof(&["run", "--config", sidecar_path.to_str().unwrap()]));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}
