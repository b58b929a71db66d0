//! End-to-end tests of the `sbprec` binary: output determinism across runs
//! and worker counts, exit codes for configuration and runtime failures,
//! the pinned CSV byte format, and the codebook export round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::{fs, str};

use sbprec::codebook::{import_text, proposed_codebook};

const SMALL_CFG: &str = "grid.n_rbs = 8\nn_rx = 2\nn_tx = 2\nsnr.start_db = 18\nsnr.stop_db = 22\nsnr.step_db = 2\nn_tbs = 25\nseed = 11\nscheme = wb legacy\nscheme = sb legacy\n";

/// Exact bytes the binary must produce for [`SMALL_CFG`]; any change to the
/// RNG layout, selection arithmetic or CSV formatting shows up here.
const GOLDEN_CSV: &str = "scheme,snr_db,trials,errors,bler\n\
sb_legacy,18.0000,25,11,0.440000\n\
sb_legacy,20.0000,25,1,0.0400000\n\
sb_legacy,22.0000,25,0,0.000000\n\
wb_legacy,18.0000,25,20,0.800000\n\
wb_legacy,20.0000,25,10,0.400000\n\
wb_legacy,22.0000,25,2,0.0800000\n";

fn sbprec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbprec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("sim.cfg");
    fs::write(&path, text).expect("config written");
    path
}

fn stdout_of(out: &Output) -> &str {
    str::from_utf8(&out.stdout).expect("utf-8 output")
}

#[test]
fn run_is_deterministic_and_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let cfg = cfg.to_str().unwrap();
    let first = sbprec(&["run", "--config", cfg, "--workers", "1"]);
    let second = sbprec(&["run", "--config", cfg, "--workers", "1"]);
    let parallel = sbprec(&["run", "--config", cfg, "--workers", "8"]);
    assert!(first.status.success(), "{first:?}");
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, parallel.stdout);
    assert_eq!(stdout_of(&first), GOLDEN_CSV);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let cfg = cfg.to_str().unwrap();
    let same = sbprec(&["run", "--config", cfg, "--seed", "11"]);
    let other = sbprec(&["run", "--config", cfg, "--seed", "12"]);
    assert!(same.status.success() && other.status.success());
    assert_eq!(stdout_of(&same), GOLDEN_CSV);
    assert_ne!(same.stdout, other.stdout);
}

#[test]
fn out_file_matches_stdout_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out_path = dir.path().join("result.csv");
    let piped = sbprec(&["run", "--config", cfg.to_str().unwrap()]);
    let filed = sbprec(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(filed.status.success());
    assert!(filed.stdout.is_empty());
    assert_eq!(fs::read(&out_path).unwrap(), piped.stdout);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "grid.n_rbs = 8\nbogus_key = 1\nscheme = sb legacy\n",
        "grid.n_rbs = 8\nn_tx = 3\nscheme = sb legacy\n",
        "grid.n_rbs = 8\n", // run needs at least one scheme
        "grid.n_rbs = 8\nscheme = sb proposed 9 9 9 9 9 9 9\nn_tx = 8\n", // over the phase-bit budget
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.cfg"));
        fs::write(&cfg, text).unwrap();
        let out = sbprec(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {out:?}");
    }
    // Bad command-line arguments get the same class of exit code.
    let out = sbprec(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    let out = sbprec(&["export-codebook", "--family", "legacy", "--n-tx", "3"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such.cfg");
    let out = sbprec(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let unwritable = dir.path().join("no_such_dir").join("x.csv");
    let out = sbprec(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn sbs_subcommand_emits_one_series_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out = sbprec(&[
        "sbs",
        "--config",
        cfg.to_str().unwrap(),
        "--sbs",
        "1,4,8",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout_of(&out);
    assert!(text.starts_with("scheme,snr_db,trials,errors,bler\n"));
    for label in ["sbs_1,", "sbs_4,", "sbs_8,"] {
        assert!(text.contains(label), "missing {label} in {text}");
    }
    // Mean metrics are reported on stderr, one line per series.
    let diag = str::from_utf8(&out.stderr).unwrap();
    assert_eq!(diag.matches("mean_metric").count(), 3, "{diag}");
}

#[test]
fn tpmi_subcommand_reports_signaling_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out = sbprec(&["tpmi", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout_of(&out);
    assert!(text.contains("subbands_per_realization 8"));
    assert!(text.contains("bits_per_subband 2"));
    assert!(text.contains("total_bits_per_realization 16"));
    assert!(text.contains("tpmi_agreement_at_separation_1 "));
}

#[test]
fn exported_codebook_round_trips_exactly() {
    let out = sbprec(&[
        "export-codebook",
        "--family",
        "proposed",
        "--n-tx",
        "2",
        "--bits",
        "3",
    ]);
    assert!(out.status.success(), "{out:?}");
    let imported = import_text::<f64>(stdout_of(&out)).expect("import parses");
    let reference = proposed_codebook::<f64>(2, &[3]).unwrap();
    assert_eq!(imported.len(), reference.len());
    for (a, b) in imported.entries().iter().zip(reference.entries()) {
        for (x, y) in a.weights().entries().iter().zip(b.weights().entries()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
