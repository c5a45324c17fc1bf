use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GAP: &str = r#"{
    "kernel": {"family": "fractional", "s": 0.5},
    "mesh": {"n_elements": 64},
    "nonlinearity": {"family": "saturating", "m": 20.0, "delta": 2.0, "g": {"type": "constant", "value": 1.0}},
    "solver": {"starts": 3}
}"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-saddle"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_solution_and_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    let o = run(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,u");
    assert_eq!(lines.len(), 66);
    let report = json(&out.join("report.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["case"]["k"], 2);
    assert!(report["residual_inf"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["uniqueness"]["verdict"], "unique");
    assert_eq!(report["seed"], 42);
}

#[test]
fn resonant_slope_is_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    assert_eq!(run(&["spectrum"], &cfg, &out).status.code(), Some(0));
    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let lambda_2 = spectrum.lines().nth(2).unwrap().split(',').nth(1).unwrap().to_string();
    let resonant = GAP.replace(
        "\"family\": \"saturating\", \"m\": 20.0, \"delta\": 2.0",
        &format!("\"family\": \"affine\", \"m\": {lambda_2}"),
    );
    let cfg = write_config(tmp.path(), &resonant);
    let o = run(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    let verdict = json(&out.join("verdict.json"));
    assert_eq!(verdict["subcommand"], "solve");
    assert!(verdict["message"].as_str().unwrap().contains("λ_2"));
    assert!(!out.join("solution.csv").exists());
    assert_eq!(run(&["probe-geometry"], &cfg, &out).status.code(), Some(1));
    assert_eq!(run(&["verify"], &cfg, &out).status.code(), Some(1));
    assert_eq!(json(&out.join("verdict.json"))["all_passed"], false);
}

#[test]
fn invalid_config_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &GAP.replace("\"s\": 0.5", "\"s\": 1.5"));
    let o = run(&["spectrum"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/kernel/s"));

    let cfg = write_config(tmp.path(), "{ \"kernel\": ");
    assert_eq!(run(&["spectrum"], &cfg, &tmp.path().join("out")).status.code(), Some(2));
}

#[test]
fn io_failures_exit_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(run(&["spectrum"], &cfg, &blocker.join("out")).status.code(), Some(3));
    assert_eq!(run(&["spectrum"], &tmp.path().join("missing.json"), &tmp.path().join("out")).status.code(), Some(3));
}

#[test]
fn spectrum_count_and_order() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-saddle"))
        .args(["spectrum", "--count", "5", "--vectors", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), csv);
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    let vecs = fs::read_to_string(out.join("eigenvectors.csv")).unwrap();
    assert_eq!(vecs.lines().next().unwrap(), "x,e1,e2,e3,e4,e5");
}

#[test]
fn verify_passes_for_gap_problem() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    assert_eq!(run(&["verify"], &cfg, &out).status.code(), Some(0));
    let v = json(&out.join("verdict.json"));
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["kernel"]["passed"], true);
    assert_eq!(v["poincare"]["passed"], true);
    assert_eq!(v["f2"]["passed"], true);
}

#[test]
fn probe_and_export_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    assert_eq!(run(&["probe-geometry"], &cfg, &out).status.code(), Some(0));
    let g = json(&out.join("geometry.json"));
    assert_eq!(g["k"], 2);
    assert_eq!(g["ratios_separated"], true);
    assert_eq!(run(&["export-matrices"], &cfg, &out).status.code(), Some(0));
    for name in ["stiffness.csv", "mass.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), 64);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 63);
    }
    let tail = fs::read_to_string(out.join("tail.csv")).unwrap();
    assert_eq!(tail.lines().next().unwrap(), "x,kappa");
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        for cmd in ["solve", "probe-geometry", "verify"] {
            assert_eq!(run(&[cmd], &cfg, out).status.code(), Some(0));
        }
    }
    for name in ["solution.csv", "report.json", "geometry.json", "verdict.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), GAP);
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-saddle"))
        .args(["solve", "--seed", "7", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&out.join("report.json"))["seed"], 7);
}
