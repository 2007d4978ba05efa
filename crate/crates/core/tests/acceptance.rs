//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::process::Command;

use darkgauge::config::{Overrides, SampleCounts, Tolerances};
use darkgauge::scenarios::{all_scenarios, ScenarioId};
use darkgauge::verify::{verify_scenario, Check, VerificationReport};

const CRITERIA: [(u8, &str); 11] = [
    (1, "dark-state validity"),
    (2, "connection oracle equivalence"),
    (3, "rb-monopole-jx charge"),
    (4, "rb-monopole-jx-tilde coupling matrix"),
    (5, "sr-monopole charges"),
    (6, "spin-orbit coupling terms"),
    (7, "scalar potential"),
    (8, "U(2) tripod"),
    (9, "gauge covariance"),
    (10, "algebra suite"),
    (11, "determinism"),
];

/// Tolerances and sample sizes fixed by the acceptance criteria, independent of the defaults.
fn pinned() -> (Tolerances, SampleCounts) {
    let tol = Tolerances {
        dark_annihilation: 1e-10,
        orthonormality: 1e-12,
        numeric_excited_weight: 1e-10,
        connection: 1e-6,
        hermiticity: 1e-8,
        scalar_numeric: 1e-6,
        scalar_closed_form: 1e-8,
        positivity: 1e-10,
        charge: 1e-3,
        generator: 1e-6,
        algebra: 1e-12,
        transform: 1e-6,
        curvature: 1e-4,
        subspace: 1e-6,
    };
    let samples = SampleCounts {
        dark_points: 1000,
        connection_points: 100,
        scalar_points: 100,
        unitary_fields: 20,
        points_per_unitary: 3,
        seed: 20240531,
    };
    (tol, samples)
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_darkgauge")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// Byte comparison of two identical CLI invocations for each output kind.
fn cli_determinism(dir: &std::path::Path) -> Vec<Check> {
    let anchor = "deterministic output";
    let mut checks = Vec::new();
    let jobs: Vec<(&str, Vec<String>, &str)> = vec![
        ("cli-verify-json", vec!["verify".into(), "u2-tripod".into(), "--json".into()], "report.json"),
        (
            "cli-sample-csv",
            vec!["sample".into(), "rb-monopole-jx".into(), "--grid".into(), "x=-1:1:5,y=-1:1:5,z=0.5".into(), "--field".into(), "B".into(), "--out".into()],
            "field.csv",
        ),
        ("cli-charge-json", vec!["charge".into(), "rb-monopole-jx".into(), "--json".into()], "charge.json"),
    ];
    for (name, args, file) in jobs {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.join(format!("{}.{}", run, file));
            let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let p = path.to_string_lossy().into_owned();
            argv.push(&p);
            let (_, stdout) = run_cli(&argv);
            outputs.push((std::fs::read(&path).unwrap_or_default(), stdout));
        }
        let same = !outputs[0].0.is_empty() && outputs[0] == outputs[1];
        checks.push(Check::at_most(name, 11, anchor, if same { 0.0 } else { 1.0 }, 0.0));
    }
    checks
}

fn main() {
    let (tol, samples) = pinned();
    let overrides = Overrides::default();
    let scenarios = all_scenarios(&overrides).expect("presets build");
    let mut reports: Vec<VerificationReport> = Vec::new();
    for s in &scenarios {
        reports.push(verify_scenario(s, &tol, &samples).expect("verification runs"));
    }
    // A second in-process run must reproduce the first exactly.
    let repeat = verify_scenario(&scenarios[0], &tol, &samples).expect("verification runs");
    let mut by_criterion: BTreeMap<u8, Vec<(String, Check)>> = BTreeMap::new();
    for r in &reports {
        for c in &r.checks {
            by_criterion.entry(c.criterion).or_default().push((r.scenario.clone(), c.clone()));
        }
    }
    let same_report = repeat == reports[0];
    let repeat_check = Check::at_most("verify-report-repeatable", 11, "deterministic output", if same_report { 0.0 } else { 1.0 }, 0.0);
    by_criterion.entry(11).or_default().push((scenarios[0].id.to_string(), repeat_check));
    let dir = tempfile::tempdir().expect("temporary directory");
    for c in cli_determinism(dir.path()) {
        by_criterion.entry(11).or_default().push(("cli".into(), c));
    }

    println!("acceptance criteria ({} scenarios: {})", reports.len(), ScenarioId::ALL.map(|id| id.as_str()).join(", "));
    let mut all_pass = true;
    for (number, title) in CRITERIA {
        let checks = by_criterion.get(&number).map(Vec::as_slice).unwrap_or(&[]);
        let failed: Vec<&(String, Check)> = checks.iter().filter(|(_, c)| !c.pass).collect();
        let pass = !checks.is_empty() && failed.is_empty();
        all_pass &= pass;
        let detail = if checks.is_empty() {
            "no checks ran".to_string()
        } else if failed.is_empty() {
            format!("{} checks", checks.len())
        } else {
            let list: Vec<String> = failed
                .iter()
                .map(|(s, c)| format!("{}/{} measured {:.3e} vs {:.1e}", s, c.name, c.measured, c.tolerance))
                .collect();
            format!("{} of {} checks failed: {}", failed.len(), checks.len(), list.join("; "))
        };
        println!("criterion {:>2} {:<38} {} ({})", number, title, if pass { "PASS" } else { "FAIL" }, detail);
    }
    if !all_pass {
        std::process::exit(1);
    }
}
