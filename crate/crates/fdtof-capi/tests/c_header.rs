//! Compiles tests/smoke.c against include/fdtof.h, links the static
//! library, and runs it. Skips silently when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

fn find_cc() -> Option<&'static str> {
    ["cc", "clang", "gcc"].into_iter().find(|cc| {
        Command::new(cc)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    })
}

/// The workspace target directory holding libfdtof_capi.a for this build
/// profile. Integration-test binaries live in target/<profile>/deps.
fn static_lib_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test executable path");
    exe.parent()
        .and_then(Path::parent)
        .expect("target profile dir")
        .to_path_buf()
}

#[test]
fn c_smoke_test_compiles_and_passes() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found; skipping header smoke test");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = static_lib_dir();
    let lib = lib_dir.join("libfdtof_capi.a");
    assert!(
        lib.exists(),
        "static library missing at {} (crate-type staticlib should produce it)",
        lib.display()
    );

    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("compiler should spawn");
    assert!(status.success(), "C compilation failed");

    let run = Command::new(&exe).output().expect("smoke binary should run");
    assert!(
        run.status.success(),
        "smoke test failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}
