//! End-to-end tests of the `mobreid` binary: pipelines over real files,
//! exit-code contract, config expansion, and manifest determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mobreid"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn mobreid");
    assert!(
        out.status.success(),
        "mobreid {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_code(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("spawn mobreid");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

/// Synthesize a small release with a planted transform and recover both
/// the template and the transform from the emitted rasters.
#[test]
fn synth_then_reid_space_recovers_plant() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "40x40", "--seed", "7", "--out", synth_out.to_str().unwrap(),
        "synth", "--template", "1", "--users", "120", "--days", "10",
        "--transform", "rot+90", "--emit-rasters", "3",
    ]);
    let truth = read_json(&synth_out.join("ground_truth.json"));
    assert_eq!(truth["transform"], "rot+90");
    assert_eq!(truth["template"], "dual-core");

    let reid_out = dir.path().join("reid");
    run_ok(&[
        "--grid", "40x40", "--out", reid_out.to_str().unwrap(),
        "reid-space",
        "--traces", synth_out.join("traces.csv").to_str().unwrap(),
        "--rasters",
        synth_out.join("raster-mono-offset.csv").to_str().unwrap(),
        synth_out.join("raster-dual-core.csv").to_str().unwrap(),
        synth_out.join("raster-west-corridor.csv").to_str().unwrap(),
        "--clusters", "8x8",
    ]);
    let m = read_json(&reid_out.join("match.json"));
    assert_eq!(m["best_city"], "dual-core");
    assert_eq!(m["best_transform"], "Rot90");
    assert_eq!(m["scores"].as_array().unwrap().len(), 24);

    // the manifest covers every artifact with a digest
    let manifest = read_json(&reid_out.join("manifest.json"));
    let arts = manifest["artifacts"].as_array().unwrap();
    assert!(arts.iter().any(|a| a["path"] == "match.json"));
    for a in arts {
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
    }
}

/// The planted start date must appear among the calendar candidates.
#[test]
fn synth_then_reid_time_keeps_planted_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth");
    run_ok(&[
        "--grid", "16x16", "--seed", "11", "--out", out.to_str().unwrap(),
        "synth", "--template", "0", "--users", "40", "--days", "30",
        "--start-date", "2019-09-15",
    ]);
    let time_out = dir.path().join("time");
    run_ok(&[
        "--grid", "16x16", "--seed", "11", "--out", time_out.to_str().unwrap(),
        "reid-time", "--traces", out.join("traces.csv").to_str().unwrap(),
    ]);
    let t = read_json(&time_out.join("timeline.json"));
    assert_eq!(t["labels"].as_array().unwrap().len(), 30);
    let candidates = t["candidates"].as_array().unwrap();
    assert!(
        candidates.iter().any(|c| c["start_date"] == "2019-09-15"),
        "2019-09-15 missing from {candidates:?}"
    );
}

/// All four default metric sections appear in the report.
#[test]
fn metrics_reports_selected_sections() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "16x16", "--seed", "3", "--out", synth_out.to_str().unwrap(),
        "synth", "--users", "30", "--days", "5",
    ]);
    let met_out = dir.path().join("metrics");
    run_ok(&[
        "--grid", "16x16", "--seed", "3", "--out", met_out.to_str().unwrap(),
        "metrics", "--traces", synth_out.join("traces.csv").to_str().unwrap(),
        "--trials", "50",
    ]);
    let rep = read_json(&met_out.join("metrics.json"));
    for key in ["kanon", "unicity", "anchors", "seclusion"] {
        assert!(rep.get(key).is_some(), "missing section {key}");
    }
}

/// GRR provenance records the exact channel probabilities.
#[test]
fn sanitize_grr_provenance_matches_channel() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "16x16", "--seed", "5", "--out", synth_out.to_str().unwrap(),
        "synth", "--users", "20", "--days", "4",
    ]);
    let san_out = dir.path().join("san");
    run_ok(&[
        "--grid", "16x16", "--seed", "5", "--out", san_out.to_str().unwrap(),
        "sanitize", "--traces", synth_out.join("traces.csv").to_str().unwrap(),
        "--mechanism", "grr", "--epsilon", "1.0",
    ]);
    let prov = read_json(&san_out.join("provenance.json"));
    assert_eq!(prov["mechanism"], "grr");
    assert_eq!(prov["parameters"]["domain_size"], 256);
    let e = 1.0f64.exp();
    let p = prov["parameters"]["p"].as_f64().unwrap();
    let q = prov["parameters"]["q"].as_f64().unwrap();
    assert!((p - e / (e + 255.0)).abs() < 1e-12);
    assert!((q - 1.0 / (e + 255.0)).abs() < 1e-12);
    assert!(san_out.join("sanitized.csv").exists());
}

/// Identical seeds give identical artifacts regardless of the worker cap.
#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "16x16", "--seed", "9", "--out", synth_out.to_str().unwrap(),
        "synth", "--users", "25", "--days", "4",
    ]);
    let digest_with = |workers: &str| -> String {
        let out: PathBuf = dir.path().join(format!("san-{workers}"));
        run_ok(&[
            "--grid", "16x16", "--seed", "9", "--workers", workers,
            "--out", out.to_str().unwrap(),
            "sanitize", "--traces", synth_out.join("traces.csv").to_str().unwrap(),
            "--mechanism", "geoind", "--epsilon", "0.004",
        ]);
        let manifest = read_json(&out.join("manifest.json"));
        manifest["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .find(|a| a["path"] == "sanitized.csv")
            .unwrap()["sha256"]
            .as_str()
            .unwrap()
            .to_string()
    };
    assert_eq!(digest_with("1"), digest_with("4"));
}

/// The sweep emits its stable CSV header and one row per parameter.
#[test]
fn sweep_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "16x16", "--seed", "13", "--out", synth_out.to_str().unwrap(),
        "synth", "--users", "30", "--days", "4",
    ]);
    let sweep_out = dir.path().join("sweep");
    run_ok(&[
        "--grid", "16x16", "--seed", "13", "--out", sweep_out.to_str().unwrap(),
        "sweep", "--traces", synth_out.join("traces.csv").to_str().unwrap(),
        "--mechanism", "grr", "--params", "1,4",
    ]);
    let csv = std::fs::read_to_string(sweep_out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mechanism,parameter,row_seed,reid_rate,reid_rate_within_one,mean_kl,clustered_corr,clamp_count,error"
    );
    assert_eq!(lines.count(), 2);
}

/// Config values fill in missing flags; explicit flags still win.
#[test]
fn config_file_expands_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.conf");
    std::fs::write(&cfg, "users=10\ndays=5\n").unwrap();
    let out = dir.path().join("synth");
    run_ok(&[
        "--grid", "12x12", "--seed", "2", "--out", out.to_str().unwrap(),
        "--config", cfg.to_str().unwrap(),
        "synth", "--days", "7",
    ]);
    let val_out = dir.path().join("val");
    run_ok(&[
        "--grid", "12x12", "--out", val_out.to_str().unwrap(),
        "validate", "--traces", out.join("traces.csv").to_str().unwrap(),
    ]);
    let summary = read_json(&val_out.join("summary.json"));
    assert_eq!(summary["users"], 10); // from the config file
    assert_eq!(summary["day_count"], 7); // CLI --days beats days=5
}

#[test]
fn missing_traces_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_code(&[
        "--out", dir.path().join("o").to_str().unwrap(),
        "validate", "--traces", dir.path().join("nope.csv").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn stochastic_subcommand_without_seed_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_code(&[
        "--out", dir.path().join("o").to_str().unwrap(),
        "synth", "--users", "5", "--days", "2",
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("--seed"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_2() {
    let (code, _) = run_code(&["validate", "--no-such-flag"]);
    assert_eq!(code, 2);
}

/// A constant density field makes every transform score undefined,
/// which is a degeneracy (exit 3), not a usage error.
#[test]
fn uniform_density_degeneracy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    run_ok(&[
        "--grid", "8x8", "--seed", "1", "--out", synth_out.to_str().unwrap(),
        "synth", "--users", "5", "--days", "4", "--emit-rasters", "2",
    ]);
    // one visit to each of the 64 cells: all clustered block sums tie
    let mut rows = String::new();
    let mut k = 0u32;
    for y in 0..8u32 {
        for x in 0..8u32 {
            rows.push_str(&format!("1,{},{},{x},{y}\n", k / 48, k % 48));
            k += 1;
        }
    }
    let uniform = dir.path().join("uniform.csv");
    std::fs::write(&uniform, rows).unwrap();
    let (code, stderr) = run_code(&[
        "--grid", "8x8", "--out", dir.path().join("o").to_str().unwrap(),
        "reid-space", "--traces", uniform.to_str().unwrap(),
        "--rasters", synth_out.join("raster-mono-offset.csv").to_str().unwrap(),
        "--clusters", "4x4",
    ]);
    assert_eq!(code, 3, "stderr: {stderr}");
}
