use std::path::Path;
use std::process::{Command, Output};

use dryfriction::analytic::DensityCurve;
use dryfriction::cli::RunManifest;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dryfriction"));
    c.env_remove("DRYFRICTION_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn curve(path: &Path) -> DensityCurve {
    DensityCurve::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn stationary_writes_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "stationary",
        "--nu",
        "1",
        "--tau",
        "1",
        "--y",
        "0",
        "--out",
        p(dir.path()),
    ]);
    assert!(stdout.contains("normalizer") && stdout.contains("residual"), "{stdout}");
    let text = std::fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    let c = DensityCurve::from_csv(&text).unwrap();
    assert_eq!(c.to_csv(), text);
    let i = c.grid.iter().position(|&v| v == 0.0).expect("grid contains 0");
    assert!((c.values[i] - 0.7625676).abs() < 1e-6);
    let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.command, "stationary");
    assert_eq!(m.outputs.len(), 2);
    assert!(m.outputs.iter().all(|o| Path::new(o).exists()));
}

#[test]
fn stuck_stationary_curve_is_skewed_toward_the_force() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "stationary",
        "--nu",
        "0.01",
        "--tau",
        "1",
        "--y",
        "0.4",
        "--out",
        p(dir.path()),
    ]);
    let c = curve(&dir.path().join("stationary.csv"));
    let peak = c.values.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(c.value_at(0.0), peak);
    assert!(c.moments().0 > 0.0);
}

#[test]
fn explicit_grid_flags() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "stationary",
        "--nu",
        "1",
        "--tau",
        "1",
        "--y",
        "0",
        "--grid-lo",
        "-2",
        "--grid-hi",
        "2",
        "--points",
        "5",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(
        curve(&dir.path().join("stationary.csv")).grid,
        vec![-2.0, -1.0, 0.0, 1.0, 2.0]
    );
}

#[test]
fn invalid_parameters_exit_2_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "stationary",
        "--nu",
        "1",
        "--tau",
        "-1",
        "--y",
        "0",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tau"));
    let out = run(&["simulate", "--t", "1", "--n-paths", "0", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n-paths"));
    let out = run(&["simulate", "--t", "1", "--drift-scale", "0.7", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--drift-scale"));
    assert_eq!(run(&["stationary", "--nu", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let out = run(&["figure1", "--out-dir", p(&file.join("sub"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn figure1_emits_five_curves_and_an_index() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["figure1", "--out-dir", p(dir.path())]);
    let expect = [
        ("stuck_w0", 0.5),
        ("stuck_w0.4", 0.42),
        ("stuck_w0.9", 0.095),
        ("partly_stuck_tau1", 2.0),
    ];
    for (name, v) in expect {
        let c = curve(&dir.path().join(format!("{name}.csv")));
        assert!((c.value_at(0.0) - v).abs() <= 1e-12, "{name}");
    }
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("figure1.json")).unwrap()).unwrap();
    let curves = index["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 5);
    let viscous = curves.iter().find(|c| c["name"] == "viscous_tau1_y3").unwrap();
    assert_eq!(viscous["annotations"]["asymptotic_mean"].as_f64(), Some(2.0));
    let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.outputs.len(), 6);
}

#[test]
fn propagator_methods() {
    let dir = tempfile::tempdir().unwrap();
    let closed = dir.path().join("closed");
    let quad = dir.path().join("quad");
    let grid = ["--grid-lo", "-2", "--grid-hi", "2", "--points", "21"];
    let base = ["propagator", "--v0", "0", "--t", "1", "--delta", "1"];
    ok(&[&base[..], &grid, &["--method", "closed", "--out", p(&closed)]].concat());
    ok(&[
        &base[..],
        &grid,
        &["--method", "quadrature", "--a", "0", "--out", p(&quad)],
    ]
    .concat());
    let c = curve(&closed.join("propagator.csv"));
    let q = curve(&quad.join("propagator.csv"));
    assert!((c.value_at(0.0) - 1.0833).abs() < 1e-4);
    for (x, y) in c.values.iter().zip(&q.values) {
        assert!((x - y).abs() <= 1e-6);
    }
    let refused = run(&[&base[..], &["--method", "closed", "--a", "0.5", "--out", p(&closed)]].concat());
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--a"));
    let refused = run(&[
        &base[..],
        &["--method", "quadrature", "--alpha", "1", "--out", p(&quad)],
    ]
    .concat());
    assert_eq!(refused.status.code(), Some(2));
    let refused = run(&[&base[..], &["--method", "closed", "--n-paths", "10", "--out", p(&quad)]].concat());
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn girsanov_method_reports_effective_sample_size() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "propagator",
        "--v0",
        "0",
        "--t",
        "1",
        "--delta",
        "1",
        "--a",
        "0.5",
        "--method",
        "girsanov",
        "--n-paths",
        "2000",
        "--dt",
        "1e-2",
        "--points",
        "11",
        "--out",
        p(dir.path()),
    ]);
    assert!(stdout.contains("ess"), "{stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("propagator.json")).unwrap()).unwrap();
    assert!(json["meta"]["ess"].as_f64().unwrap() > 0.0);
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let args = [
        &[
            "simulate",
            "--alpha",
            "0.5",
            "--a",
            "0.2",
            "--t",
            "1",
            "--dt",
            "1e-2",
            "--n-paths",
            "1000",
            "--out",
            p(dir),
        ][..],
        extra,
    ]
    .concat();
    run(&args)
}

fn files(dir: &Path) -> Vec<Vec<u8>> {
    ["terminal.csv", "summary.json", "manifest.json"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn simulate_is_byte_identical_under_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(simulate(a.path(), &["--seed", "42", "--record-functionals"])
        .status
        .success());
    // relative manifest paths differ, so compare the data files
    let out = bin()
        .args([
            "simulate",
            "--alpha",
            "0.5",
            "--a",
            "0.2",
            "--t",
            "1",
            "--dt",
            "1e-2",
            "--n-paths",
            "1000",
        ])
        .args(["--record-functionals", "--out", p(b.path())])
        .env("DRYFRICTION_SEED", "42")
        .env("RAYON_NUM_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(files(a.path())[..2], files(b.path())[..2]);
    let header = std::fs::read_to_string(a.path().join("terminal.csv")).unwrap();
    assert!(header.starts_with("path_index,terminal,l_t,occupation,int_b,int_abs_b,int_b2\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 42);
    assert_eq!(summary["n"], 1000);
}

#[test]
fn replay_reproduces_simulation_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let again = dir.path().join("again");
    assert!(simulate(&first, &["--seed", "9"]).status.success());
    let out = bin()
        .args([
            "replay",
            "--manifest",
            p(&first.join("manifest.json")),
            "--out",
            p(&again),
        ])
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("identical").count(), 2, "{stdout}");
    assert_eq!(files(&first)[..2], files(&again)[..2]);
}

#[test]
fn replay_flags_a_tampered_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert!(simulate(&first, &["--seed", "9"]).status.success());
    std::fs::write(first.join("summary.json"), "{}").unwrap();
    let out = run(&[
        "replay",
        "--manifest",
        p(&first.join("manifest.json")),
        "--out",
        p(&dir.path().join("b")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn deterministic_decay_without_noise() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--diffusion",
        "0",
        "--v0",
        "1",
        "--t",
        "0.5",
        "--dt",
        "1e-3",
        "--n-paths",
        "4",
        "--out",
        p(dir.path()),
    ]);
    let text = std::fs::read_to_string(dir.path().join("terminal.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 0.5).abs() <= 1e-3 + 1e-12);
    }
}

#[test]
fn driftless_simulation_prints_ks_to_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "simulate",
        "--t",
        "1",
        "--dt",
        "1e-3",
        "--n-paths",
        "200000",
        "--out",
        p(dir.path()),
    ]);
    let line = stdout
        .lines()
        .find(|l| l.starts_with("ks_vs_closed_form"))
        .expect("ks printed");
    let ks: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(ks <= 0.01, "{ks}");
}
