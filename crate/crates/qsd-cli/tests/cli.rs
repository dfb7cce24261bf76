//! End-to-end checks of the binary: artifact shapes, exit codes, the error
//! JSON contract and byte-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qsd(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsd"))
        .args(args)
        .arg("--out")
        .arg(out_root)
        .output()
        .expect("binary runs")
}

/// Run directory path from stdout (printed as the last line).
fn run_dir(out: &Output) -> PathBuf {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8_lossy(&out.stdout).trim().to_owned())
}

fn read_json(dir: &Path, name: &str) -> Value {
    let text = fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("{name} should exist: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name} should be JSON: {e}"))
}

#[test]
fn eigensolve_reports_the_half_integer_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&qsd(&["eigensolve", "--mu", "1", "--k", "4"], tmp.path()));
    let values: Vec<f64> =
        serde_json::from_value(read_json(&dir, "eigenvalues.json")).unwrap();
    assert_eq!(values.len(), 4);
    for (k, v) in values.iter().enumerate() {
        assert!(
            (v - (k as f64 + 0.5)).abs() < 1e-5,
            "eigenvalue {k} came out as {v}"
        );
    }

    let manifest = read_json(&dir, "manifest.json");
    assert_eq!(manifest["command"], "eigensolve");
    assert_eq!(manifest["parameters"]["k"], 4);
    assert_eq!(manifest["parameters"]["grid_points"], 1024);
    assert!(manifest["seed"].is_null());
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        assert!(
            dir.join(f.as_str().unwrap()).is_file(),
            "manifest lists missing file {f}"
        );
    }
}

#[test]
fn wigner_finds_the_single_negative_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&qsd(&["wigner", "--n", "1"], tmp.path()));
    let phase = fs::read_to_string(dir.join("phase.csv")).unwrap();
    assert!(phase.starts_with("x,y,f\n"));

    let regions = read_json(&dir, "negative_regions.json");
    let regions = regions.as_array().unwrap();
    assert_eq!(regions.len(), 1, "first excited level has one negative region");
    assert_eq!(regions[0]["rho_lo"], 0.0, "the region is a disk");
    let rho_hi = regions[0]["rho_hi"].as_f64().unwrap();
    assert!((rho_hi - 0.707107).abs() < 1e-5, "disk boundary {rho_hi}");
    assert_eq!(regions[0]["sign"], "negative");
}

#[test]
fn fit_rejects_malformed_rows_with_detail() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "log_price,side\nnotanumber,buy\n0.3,sell\n").unwrap();
    let out = qsd(&["fit", "--input", input.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    assert_eq!(err["error"], "MalformedRow");
    assert_eq!(err["exit"], 1);
    assert!(
        err["message"].as_str().unwrap().contains("row 1"),
        "detail should name the bad row: {err}"
    );
    // no run directory is left behind on failure
    assert!(fs::read_dir(tmp.path()).unwrap().all(|e| !e.unwrap().path().is_dir()));
}

#[test]
fn degenerate_slice_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // the slice at 7.3 lies inside the phase window but carries ~0 mass
    let out = qsd(&["curves", "--n", "1", "--x-fixed", "7.3"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "SliceDegenerate");
    assert_eq!(err["exit"], 2);
}

#[test]
fn identical_configs_reproduce_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["montecarlo", "--trials", "200", "--n-per-trial", "50", "--seed", "7"];
    let dir_a = run_dir(&qsd(&args, a.path()));
    let dir_b = run_dir(&qsd(&args, b.path()));
    for name in ["report.json", "manifest.json"] {
        assert_eq!(
            fs::read(dir_a.join(name)).unwrap(),
            fs::read(dir_b.join(name)).unwrap(),
            "{name} should be byte-identical across reruns"
        );
    }
    let report = read_json(&dir_a, "report.json");
    assert_eq!(report["trials"], 200);
    assert_eq!(report["seed"], 7);
    assert!(report["ratio"].as_f64().unwrap() > 0.5);

    let manifest = read_json(&dir_a, "manifest.json");
    assert_eq!(manifest["seed"], 7);

    let (c, d) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["curves", "--n", "2", "--mu", "1.5", "--m", "0.2"];
    let dir_c = run_dir(&qsd(&args, c.path()));
    let dir_d = run_dir(&qsd(&args, d.path()));
    for name in ["supply.csv", "conditional_demand.csv", "giffen.json"] {
        assert_eq!(
            fs::read(dir_c.join(name)).unwrap(),
            fs::read(dir_d.join(name)).unwrap(),
            "{name} should be byte-identical across reruns"
        );
    }
}

#[test]
fn curve_plot_is_a_labeled_polyline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&qsd(&["curves", "--n", "0", "--plot"], tmp.path()));
    let svg = fs::read_to_string(dir.join("curves.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    assert!(svg.contains(">ln c</text>"));
    assert!(svg.contains(">CDF</text>"));

    // the plotted supply data is a monotone CDF
    let supply = fs::read_to_string(dir.join("supply.csv")).unwrap();
    let cdf: Vec<f64> = supply
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
    assert!((cdf.last().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn heatmap_of_the_second_level_shows_the_annular_band() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&qsd(
        &["wigner", "--n", "2", "--plot", "--grid-points", "96"],
        tmp.path(),
    ));
    let svg = fs::read_to_string(dir.join("phase.svg")).unwrap();
    let blue_cells = svg
        .match_indices("fill=\"#")
        .filter(|(i, _)| {
            let hex = &svg[i + 7..i + 13];
            let r = u8::from_str_radix(&hex[0..2], 16).unwrap();
            let b = u8::from_str_radix(&hex[4..6], 16).unwrap();
            b > r.saturating_add(30)
        })
        .count();
    assert!(blue_cells > 50, "annular band should be visible, got {blue_cells} blue cells");
}

#[test]
fn fit_recovers_moments_from_a_clean_file() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("ticks.csv");
    let mut csv = String::from("log_price,side\n");
    // symmetric three-point sample: mean 0.1, variance 0.02 exactly
    for (v, side) in [(0.1, "buy"), (0.3, "sell"), (-0.1, "buy"), (0.1, "sell")] {
        csv.push_str(&format!("{v},{side}\n"));
    }
    fs::write(&input, csv).unwrap();
    let dir = run_dir(&qsd(&["fit", "--input", input.to_str().unwrap()], tmp.path()));
    let fit = read_json(&dir, "fit.json");
    assert_eq!(fit["records"], 4);
    assert!((fit["mean"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    let risk = fit["risk"].as_f64().unwrap();
    assert!((risk - 0.08 / 3.0).abs() < 1e-12);
    let mu = fit["mu"].as_f64().unwrap();
    assert!((mu - 0.5 / risk).abs() < 1e-9);
}

#[test]
fn unknown_flags_fail_closed_with_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qsd(&["eigensolve", "--such-flag", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidParameter");
}
