use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn krein(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krein")).current_dir(dir).args(args).output().expect("binary runs")
}

fn setup(config: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    fs::write(&p, config).unwrap();
    (dir, p)
}

fn run_ok(dir: &Path, args: &[&str]) {
    let out = krein(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_s(path: &Path, ks: impl Iterator<Item = f64>, s: impl Fn(f64) -> (f64, f64)) {
    let mut text = String::from("k,re,im\n");
    for k in ks {
        let (re, im) = s(k);
        text.push_str(&format!("{k},{re},{im}\n"));
    }
    fs::write(path, text).unwrap();
}

/// `S = conj(f)/f` for `f = prod (k + i a_j) / (k + i b_j)`, times `((k + i c)/(k - i c))^2` per entry of `extra`.
fn rational_s(k: f64, num: &[f64], den: &[f64], extra: &[f64]) -> (f64, f64) {
    let mut arg = 0.0;
    for a in num {
        arg -= 2.0 * a.atan2(k);
    }
    for b in den {
        arg += 2.0 * b.atan2(k);
    }
    for c in extra {
        arg += 4.0 * c.atan2(k);
    }
    (arg.cos(), arg.sin())
}

const SMALL: &str = r#""grids": {"k_max": 40, "k_step": 0.02, "x_max": 2, "x_step": 0.0625}"#;

#[test]
fn forward_zero_gives_unit_s() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "presets": {{"potential": "zero"}}}}"#));
    run_ok(dir.path(), &["forward", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    let s = rows(&dir.path().join("o/s_matrix.csv"));
    assert_eq!(s.len(), 2000);
    assert!(s.iter().all(|r| r[1] == 1.0 && r[2] == 0.0));
    assert!(rows(&dir.path().join("o/bound_states.csv")).is_empty());
}

#[test]
fn forward_exp_is_unitary_and_consistent() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "presets": {{"potential": "exp(a=1)", "support": 10}}}}"#));
    run_ok(dir.path(), &["forward", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    let s = rows(&dir.path().join("o/s_matrix.csv"));
    let delta = rows(&dir.path().join("o/phase_shift.csv"));
    for (a, d) in s.iter().zip(&delta) {
        assert!(((a[1] * a[1] + a[2] * a[2]).sqrt() - 1.0).abs() < 1e-10);
        let (c, sn) = ((2.0 * d[1]).cos(), (2.0 * d[1]).sin());
        assert!((a[1] - c).abs() < 1e-10 && (a[2] - sn).abs() < 1e-10);
    }
    // high-energy phase shift: delta ~ -(1/2k) int q
    let last = delta.last().unwrap();
    let born = -0.5 * (1.0 - (-10.0f64).exp()) / last[0];
    assert!((last[1] - born).abs() < 1e-3 * born.abs(), "{} vs {born}", last[1]);
    let summary = json(&dir.path().join("o/forward.json"));
    assert!((summary["half_integral"].as_f64().unwrap() - 0.5 * (1.0 - (-10.0f64).exp())).abs() < 1e-4);
}

/// Root of `sqrt(d - kappa^2) cot(sqrt(d - kappa^2) w) = -kappa`, the square-well bound state.
fn well_bound_state(d: f64, w: f64) -> f64 {
    let g = |kappa: f64| {
        let p = (d - kappa * kappa).sqrt();
        p * (p * w).cos() + kappa * (p * w).sin()
    };
    let (mut lo, mut hi) = (1e-9, d.sqrt() - 1e-9);
    assert!(g(lo) * g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn forward_well_has_one_bound_state() {
    let (dir, cfg) =
        setup(&format!(r#"{{{SMALL}, "presets": {{"potential": "well(d=5,w=1)", "step": 0.0078125}}}}"#));
    run_ok(dir.path(), &["forward", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    let b = rows(&dir.path().join("o/bound_states.csv"));
    assert_eq!(b.len(), 1);
    let exact = well_bound_state(5.0, 1.0);
    assert!((b[0][0] - exact).abs() < 1e-3, "{} vs {exact}", b[0][0]);
    assert!(b[0][1] > 0.0);
}

#[test]
fn invert_unit_s_gives_zero_potential() {
    let (dir, cfg) = setup(&format!(
        r#"{{{SMALL}, "presets": {{"scattering": "zero"}}, "cross_check": ["marchenko", "gl", "hybrid"]}}"#
    ));
    run_ok(dir.path(), &["invert", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    for f in ["q.csv", "q_marchenko.csv", "q_gl.csv", "q_hybrid.csv"] {
        assert!(rows(&dir.path().join("o").join(f)).iter().all(|r| r[1].abs() < 1e-8), "{f}");
    }
    let r = json(&dir.path().join("o/report.json"));
    assert_eq!(r["index"], 0);
    assert_eq!(r["discrepancies"].as_array().unwrap().len(), 6);
}

#[test]
fn invert_bargmann_file_matches_closed_form() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "io": {{"s_matrix": "s.csv"}}, "method": "marchenko"}}"#));
    write_s(&dir.path().join("s.csv"), (0..2000).map(|i| (i as f64 + 0.5) * 0.02), |k| rational_s(k, &[2.0], &[1.0], &[]));
    run_ok(dir.path(), &["invert", "--config", cfg.to_str().unwrap(), "--method", "krein", "--out", "o"]);
    let r = json(&dir.path().join("o/report.json"));
    assert_eq!(r["method"], "krein");
    assert!((r["a_zero"].as_f64().unwrap() + 1.5).abs() < 1e-3);
    for row in rows(&dir.path().join("o/q.csv")).iter().filter(|r| r[0] >= 0.2) {
        let e = (-2.0 * row[0]).exp();
        let exact = 24.0 * e / ((3.0 - e) * (3.0 - e));
        assert!((row[1] - exact).abs() < 2e-2, "x = {}: {} vs {exact}", row[0], row[1]);
    }
}

#[test]
fn nonuniform_input_is_resampled() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "io": {{"s_matrix": "s.csv"}}}}"#));
    let ks = (0..=1700).map(|i| 0.005 + 40.2 * (i as f64 / 1700.0).powf(1.2));
    write_s(&dir.path().join("s.csv"), ks, |k| rational_s(k, &[2.0], &[1.0], &[]));
    run_ok(dir.path(), &["check", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    let r = json(&dir.path().join("o/admissibility.json"));
    let res = r["resample_residual"].as_f64().unwrap();
    assert!(res < 1e-4, "{res}");
    assert_eq!(r["index"], 0);
    assert!((r["positivity_margin"].as_f64().unwrap() - 0.25).abs() < 1e-3);
    assert_eq!(r["admissible"], true);
}

#[test]
fn index_minus_two_needs_bound_states() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "io": {{"s_matrix": "s.csv"}}}}"#));
    write_s(&dir.path().join("s.csv"), (0..2000).map(|i| (i as f64 + 0.5) * 0.02), |k| rational_s(k, &[2.0], &[1.0], &[1.0]));
    let out = krein(dir.path(), &["invert", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("-2") && err.contains("bound-state reduction"), "{err}");

    let with = dir.path().join("with.json");
    fs::write(&with, format!(r#"{{{SMALL}, "io": {{"s_matrix": "s.csv"}}, "bound_states": {{"ks": [1.0]}}}}"#)).unwrap();
    run_ok(dir.path(), &["invert", "--config", with.to_str().unwrap(), "--out", "r"]);
    let r = json(&dir.path().join("r/report.json"));
    assert_eq!(r["index"], -2);
    assert_eq!(r["reduced"], true);

    let wrong = dir.path().join("wrong.json");
    fs::write(&wrong, format!(r#"{{{SMALL}, "io": {{"s_matrix": "s.csv"}}, "bound_states": {{"ks": [1.0, 2.0]}}}}"#))
        .unwrap();
    assert_eq!(krein(dir.path(), &["invert", "--config", wrong.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn margin_below_threshold_exits_four() {
    let (dir, cfg) =
        setup(&format!(r#"{{{SMALL}, "presets": {{"scattering": "bargmann"}}, "tolerances": {{"min_margin": 0.5}}}}"#));
    let out = krein(dir.path(), &["invert", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn ingestion_failures_exit_two() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "io": {{"s_matrix": "missing.csv"}}}}"#));
    assert_eq!(krein(dir.path(), &["invert", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(dir.path().join("missing.csv"), "k,re,im\n0.01,1,0\n0.03,x,0\n").unwrap();
    assert_eq!(krein(dir.path(), &["check", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"grids": {"x_max": 1.01, "x_step": 0.0625}}"#).unwrap();
    assert_eq!(krein(dir.path(), &["forward", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(krein(dir.path(), &["forward"]).status.code(), Some(2));
}

#[test]
fn roundtrip_zero_has_zero_defects() {
    let (dir, cfg) = setup(&format!(r#"{{{SMALL}, "presets": {{"potential": "zero"}}}}"#));
    run_ok(dir.path(), &["roundtrip", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    let r = json(&dir.path().join("o/roundtrip.json"));
    for key in ["q_sup", "q_l1", "s_sup", "s_l1"] {
        assert!(r[key].as_f64().unwrap() < 1e-10, "{key}");
    }
    assert_eq!(r["within_tolerance"], true);
}

#[test]
fn outputs_are_deterministic() {
    let (dir, cfg) = setup(&format!(
        r#"{{{SMALL}, "presets": {{"scattering": "bargmann"}}, "cross_check": ["marchenko"], "io": {{"out_dir": "o1"}}}}"#
    ));
    run_ok(dir.path(), &["invert", "--config", cfg.to_str().unwrap()]);
    let out = Command::new(env!("CARGO_BIN_EXE_krein"))
        .current_dir(dir.path())
        .env("SCATTER_THREADS", "2")
        .args(["invert", "--config", cfg.to_str().unwrap(), "--out", "o2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in ["q.csv", "q_marchenko.csv", "report.json"] {
        assert_eq!(fs::read(dir.path().join("o1").join(f)).unwrap(), fs::read(dir.path().join("o2").join(f)).unwrap(), "{f}");
    }
}
