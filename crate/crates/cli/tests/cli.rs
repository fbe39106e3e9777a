use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::{Command, Output};

use qst_memory::chain::{BoundaryProvider, ChainSpec, PstClosedForm, SpectralPropagator};
use qst_memory::kernel;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qst-memory")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    meta: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse(text: &str) -> Csv {
    let mut lines = text.lines();
    let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    Csv { meta, header, rows }
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn column(csv: &Csv, name: &str) -> Vec<f64> {
    let i = csv.header.iter().position(|h| h == name).unwrap();
    csv.rows.iter().map(|r| num(&r[i])).collect()
}

#[test]
fn amplitudes_match_closed_form() {
    let csv = parse(&ok(&["amplitudes", "--length", "9", "--points", "41"]));
    assert_eq!(csv.header, ["t", "re_f11", "im_f11", "re_f1N", "im_f1N"]);
    assert_eq!(csv.rows.len(), 41);
    let p = PstClosedForm::new(9).unwrap();
    for r in &csv.rows {
        let b = p.boundary(num(&r[0]));
        assert!((num(&r[1]) - b.f11.re).abs() < 1e-12 && (num(&r[2]) - b.f11.im).abs() < 1e-12);
        assert!((num(&r[3]) - b.f1n.re).abs() < 1e-12 && (num(&r[4]) - b.f1n.im).abs() < 1e-12);
    }
}

#[test]
fn perfect_transfer_row() {
    let t = FRAC_PI_2.to_string();
    let csv = parse(&ok(&["amplitudes", "--length", "7", "--t-min", &t, "--points", "1"]));
    let f = num(&csv.rows[0][3]).hypot(num(&csv.rows[0][4]));
    assert!((f - 1.0).abs() < 1e-12);
}

#[test]
fn floats_have_seventeen_digits() {
    let csv = parse(&ok(&["amplitudes", "--points", "5"]));
    for r in &csv.rows {
        for v in r {
            assert_eq!(v.trim_start_matches('-').split('e').next().unwrap().len(), 18, "{v}");
        }
    }
}

#[test]
fn sweep_uses_anchor_values() {
    let csv = parse(&ok(&["sweep-uses", "--length", "6", "--uses", "10", "--deltas", "0,0.01,0.05,0.1"]));
    assert_eq!(csv.header, ["n", "delta_0", "delta_0.01", "delta_0.05", "delta_0.1"]);
    assert!((csv.meta["locc_limit"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    for f in column(&csv, "delta_0") {
        assert!((f - 1.0).abs() < 1e-12);
    }
    let f10 = column(&csv, "delta_0.05")[9];
    assert!((f10 - 0.91).abs() <= 0.01, "{f10}");
    for name in ["delta_0.01", "delta_0.05", "delta_0.1"] {
        let col = column(&csv, name);
        assert!(col.windows(2).all(|w| w[1] <= w[0]), "{name}: {col:?}");
    }
}

#[test]
fn sweep_length_crosses_locc_limit() {
    let csv = parse(&ok(&[
        "sweep-length", "--delta", "0.01", "--length-min", "2150", "--length-max", "2150",
    ]));
    assert_eq!(csv.header, ["N", "F1", "F2", "F3", "F4", "F5"]);
    let (f3, f4) = (column(&csv, "F3")[0], column(&csv, "F4")[0]);
    assert!(f4 <= 2.0 / 3.0 && 2.0 / 3.0 < f3, "{f3} {f4}");
}

#[test]
fn sweep_length_agrees_with_spectral_amplitudes() {
    let csv = parse(&ok(&["sweep-length", "--length-min", "3", "--length-max", "120", "--length-step", "13"]));
    let t = 1.01 * FRAC_PI_2;
    for r in &csv.rows {
        let n: usize = r[0].parse().unwrap();
        let prop = SpectralPropagator::for_chain(&ChainSpec::pst(n).unwrap()).unwrap();
        for (i, cell) in r[1..].iter().enumerate() {
            let f = kernel::nth_use_fidelity(&vec![t; i + 1], &prop).unwrap();
            assert!((num(cell) - f).abs() < 1e-9, "N={n} n={}", i + 1);
        }
        assert!(r[1..].windows(2).all(|w| num(&w[1]) <= num(&w[0])));
    }
}

fn quantity(csv: &Csv, name: &str) -> f64 {
    num(&csv.rows.iter().find(|r| r[0] == name).unwrap()[1])
}

#[test]
fn map_report() {
    let csv = parse(&ok(&["map", "--length", "7", "--times", "1.2,1.7"]));
    assert_eq!(csv.header, ["quantity", "value"]);
    assert!(quantity(&csv, "decomposition_residual") <= 1e-10);
    assert!(quantity(&csv, "choi_eigenvalue_1") >= -1e-9);
    let p = PstClosedForm::new(7).unwrap();
    assert!((quantity(&csv, "gamma2") - (1.0 - p.boundary(1.7).f1n.norm_sqr())).abs() < 1e-12);
    let a1 = p.boundary(1.2).f11.norm_sqr() + p.boundary(1.2).f1n.norm_sqr();
    assert!((quantity(&csv, "lambda2") - (1.0 - a1 * a1)).abs() < 1e-12);
}

#[test]
fn second_use_bound_stays_below_first_use() {
    for t in ["1.3", "1.5", "1.9"] {
        let csv = parse(&ok(&["map", "--length", "8", "--times", &format!("{t},{t}")]));
        assert!(quantity(&csv, "capacity_bound") <= quantity(&csv, "coherent_information_first_use") + 1e-9);
    }
}

#[test]
fn antidegradable_map_has_zero_bound() {
    let csv = parse(&ok(&["map", "--length", "6", "--times", "0.4,0.4"]));
    assert!(quantity(&csv, "gamma2") >= 0.5);
    assert_eq!(quantity(&csv, "capacity_bound"), 0.0);
}

#[test]
fn concurrence_profiles() {
    let csv = parse(&ok(&["concurrence", "--length", "10", "--t-min", "0", "--t-max", &std::f64::consts::PI.to_string(), "--points", "3"]));
    assert_eq!(csv.header, ["t", "C1", "C2"]);
    assert!((column(&csv, "C1")[1] - 1.0).abs() < 1e-12);

    let csv = parse(&ok(&["concurrence", "--length", "10"]));
    assert_eq!(csv.rows.len(), 600);
    let windows = csv.meta["second_use_zero_windows"].as_array().unwrap();
    assert!(windows.iter().any(|w| w[1].as_f64().unwrap() - w[0].as_f64().unwrap() > 0.1));
}

#[test]
fn validate_passes_and_reports_json() {
    let text = ok(&["validate", "--instances", "10", "--seed", "5", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metadata"]["all_passed"], true);
    assert_eq!(v["columns"][0], "suite");
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn output_is_deterministic_across_runs_and_pools() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv", "c.csv"].iter().map(|f| dir.path().join(f)).collect();
    for (path, jobs) in paths.iter().zip(["1", "4", "3"]) {
        ok(&[
            "validate", "--instances", "20", "--seed", "9", "--jobs", jobs, "--out", path.to_str().unwrap(),
        ]);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, std::fs::read(&paths[2]).unwrap());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "length = 5\npoints = 4\ndelta = 0.02\n");
    let csv = parse(&ok(&["amplitudes", "--config", &cfg, "--length", "8"]));
    assert_eq!(csv.meta["config"]["length"], 8);
    assert_eq!(csv.meta["config"]["points"], 4);
    assert_eq!(csv.rows.len(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "bad.toml", "lenght = 5\n");
    assert_eq!(run(&["amplitudes", "--config", &bad_key]).status.code(), Some(2));
    assert_eq!(run(&["amplitudes", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["amplitudes", "--length", "2"]).status.code(), Some(2));
    assert_eq!(run(&["sweep-length", "--length-min", "9", "--length-max", "4"]).status.code(), Some(2));
    assert_eq!(run(&["sweep-uses", "--uses", "30"]).status.code(), Some(4));
    assert_eq!(run(&["map", "--length", "40"]).status.code(), Some(4));
}
