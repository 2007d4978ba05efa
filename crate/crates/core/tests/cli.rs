//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darkgauge")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn verify_rubidium_passes_with_named_charge_check() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = run(&["verify", "rb-monopole-jx", "--json", path_str(&json)]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("charge-Jx = +1"));
    assert!(stdout.trim_end().ends_with("overall PASS"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["scenario"], "rb-monopole-jx");
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    let charge = checks.iter().find(|c| c["name"] == "charge-Jx = +1").unwrap();
    assert!(charge["measured"].is_string() && charge["tolerance"] == "1e-3");
    assert!(report["environment"]["units"]["hbar"].is_string());
}

#[test]
fn verify_exit_code_matches_overall_pass() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("so.json");
    let out = run(&["verify", "rb-so-coupling", "--json", path_str(&json)]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let all = report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true);
    assert_eq!(report["pass"], all);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
}

#[test]
fn spin_orbit_sample_is_constant() {
    let single = run(&["sample", "rb-so-coupling", "--grid", "single-point"]);
    assert_eq!(single.status.code(), Some(0));
    let other = run(&["sample", "rb-so-coupling", "--grid", "point=-2,1.5,0.25"]);
    let (a, b) = (csv_rows(&String::from_utf8(single.stdout).unwrap()), csv_rows(&String::from_utf8(other.stdout).unwrap()));
    assert_eq!(a.len(), 2);
    assert_eq!(a[0][0..3], ["x", "y", "z"]);
    assert_eq!(a[0].last().unwrap(), "error");
    assert_eq!(a[0].len(), 3 + 2 * 27 + 1);
    for (x, y) in a[1][3..a[1].len() - 1].iter().zip(&b[1][3..b[1].len() - 1]) {
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!((x - y).abs() < 1e-8);
    }
    // 17 significant digits in scientific notation.
    let mantissa = a[1][0].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn sample_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&first, &second] {
        let out = run(&["sample", "sr-monopole", "--grid", "sphere:r=1,ntheta=4,nphi=5", "--field", "Phi", "--out", path_str(path)]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("x,y,z,re_Phi_11,"));
}

#[test]
fn guarded_points_fill_the_error_column() {
    let out = run(&["sample", "rb-monopole-jx", "--grid", "x=-1:1:3,z=0.5", "--field", "B"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    assert!(rows[1].last().unwrap().is_empty());
    assert!(rows[2].last().unwrap().contains("z-axis"));
    assert!(rows[2][3].is_empty());
    let all_bad = run(&["sample", "rb-monopole-jx", "--grid", "point=0,0,1"]);
    assert_eq!(all_bad.status.code(), Some(3));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["verify", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "rb-monopole-jx"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "rb-monopole-jx", "--grid", "x=0:1:0"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "rb-monopole-jx", "--grid", "single-point", "--field", "C"]).status.code(), Some(2));
    assert_eq!(run(&["charge", "rb-monopole-jx", "--radius", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["charge", "rb-monopole-jx", "--transformed"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn transformed_strontium_charge_json() {
    let out = run(&["charge", "sr-monopole", "--radius", "1.0", "--transformed"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let coeff = |k: &str| v["decomposition"][k].as_str().unwrap().parse::<f64>().unwrap();
    assert!((coeff("c3") + 2.0).abs() < 1e-3);
    assert!((coeff("c8") + 2.0 * 3f64.sqrt()).abs() < 1e-3);
    for k in ["c0", "c1", "c2", "c4", "c5", "c6", "c7"] {
        assert!(coeff(k).abs() < 1e-3, "{}", k);
    }
}

#[test]
fn decompose_reads_toml_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("jx.toml");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    std::fs::write(&toml_path, format!("re = [[0, {h}, 0], [{h}, 0, {h}], [0, {h}, 0]]\n")).unwrap();
    let out = run(&["decompose", "--matrix", path_str(&toml_path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |label: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{} = ", label))).unwrap().parse().unwrap()
    };
    assert!((value("c1") - 2f64.sqrt()).abs() < 1e-12);
    assert!((value("c6") - 2f64.sqrt()).abs() < 1e-12);
    assert!(value("c3").abs() < 1e-12);
    let json_path = dir.path().join("sy.json");
    std::fs::write(&json_path, r#"{"re": [[0, 0], [0, 0]], "im": [[0, -1], [1, 0]]}"#).unwrap();
    let out = run(&["decompose", "--matrix", path_str(&json_path)]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("cy = 1.0000000000000000e0"));
    std::fs::write(&json_path, r#"{"re": [[0, 1], [0, 0]]}"#).unwrap();
    assert_eq!(run(&["decompose", "--matrix", path_str(&json_path)]).status.code(), Some(2));
}

#[test]
fn config_file_overrides_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"rb-so-coupling\"\nk = 2.0\n").unwrap();
    let base = run(&["sample", "--grid", "single-point", "--config", path_str(&cfg)]);
    assert_eq!(base.status.code(), Some(0));
    let default = run(&["sample", "rb-so-coupling", "--grid", "single-point"]);
    let (a, b) = (csv_rows(&String::from_utf8(base.stdout).unwrap()), csv_rows(&String::from_utf8(default.stdout).unwrap()));
    // A_x scales with k: first A entry doubles.
    let (x, y): (f64, f64) = (a[1][3].parse().unwrap(), b[1][3].parse().unwrap());
    assert!((x - 2.0 * y).abs() < 1e-6);
    std::fs::write(&cfg, "k = -1.0\n").unwrap();
    assert_eq!(run(&["verify", "rb-monopole-jx", "--config", path_str(&cfg)]).status.code(), Some(2));
}
