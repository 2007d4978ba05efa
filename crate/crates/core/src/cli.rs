//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::monopole::{charge_report, ChargeReport};
use crate::sampling::{sample_csv, FieldKind, GridSpec, SampleRequest};
use crate::scenarios::{make_scenario, Scenario, ScenarioId};
use crate::su3::Decomposition;
use crate::verify::{verify_scenario, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "darkgauge", version, about = "Gauge potentials and monopoles of laser-dressed dark states")]
pub struct Cli {
    /// TOML file with units, step sizes, guards, tolerances and sample counts.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Scenario id; falls back to `scenario` in the config file.
    pub scenario: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check of a scenario; exits 0 only if all pass.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Write the report as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Evaluate A, B or Phi on a grid and write CSV.
    Sample {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// `single-point`, `point=x,y,z`, `x=a:b:n,y=a:b:n,z=a:b:n` or `sphere:r=..,ntheta=..,nphi=..`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "A", value_parser = ["A", "B", "Phi"])]
        field: String,
        /// Output file; standard output when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Index of the dark basis.
        #[arg(long, default_value_t = 0)]
        gauge: usize,
        /// Use the connection after the scenario's bundled gauge transformation.
        #[arg(long)]
        transformed: bool,
    },
    /// Monopole charge on a sphere of the given radius.
    Charge {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Write JSON here instead of standard output.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        gauge: usize,
        #[arg(long)]
        transformed: bool,
    },
    /// Print the Gell-Mann (or Pauli) coefficients of a Hermitian matrix.
    Decompose {
        /// TOML or JSON file with `re = [[..]]` and optional `im = [[..]]`.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownScenario(_)
        | Error::Parse(_)
        | Error::InvalidParameter(_)
        | Error::NotHermitian { .. }
        | Error::DimensionMismatch { .. } => EXIT_USAGE,
        Error::NearSingularity { .. } => EXIT_GUARD,
        _ => EXIT_FAILED,
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Verify { scenario, json } => {
            let s = load_scenario(scenario, &config)?;
            let report = verify_scenario(&s, &config.tolerances, &config.samples)?;
            print!("{}", report_text(&report));
            if let Some(path) = json {
                write_file(path, &to_pretty(&report_json(&report)))?;
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Sample { scenario, grid, field, out, gauge, transformed } => {
            let s = load_scenario(scenario, &config)?;
            let grid: GridSpec = grid.parse()?;
            let request = SampleRequest { field: field.parse::<FieldKind>()?, gauge: *gauge, transformed: *transformed };
            let output = sample_csv(&s, &grid, &request)?;
            match out {
                Some(path) => write_file(path, &output.csv)?,
                None => print!("{}", output.csv),
            }
            if output.errors > 0 {
                eprintln!("{} of {} points could not be evaluated", output.errors, output.points);
            }
            Ok(if output.guard_errors == output.points {
                EXIT_GUARD
            } else if output.errors > output.guard_errors {
                EXIT_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::Charge { scenario, radius, json, gauge, transformed } => {
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Error::InvalidParameter(format!("radius must be positive, got {}", radius)));
            }
            let s = load_scenario(scenario, &config)?;
            let r = *radius;
            let report = if *transformed {
                let t = s
                    .transform
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter(format!("{} has no bundled transformation", s.id)))?;
                let a = s.transformed_connection()?.expect("transform present");
                charge_report(a, r, &s.transformed_charge_settings(), Some(&t.reference), s.hbar())?
            } else {
                let reference = s.gauge(*gauge)?.reference.clone();
                charge_report(s.numeric_connection(*gauge)?, r, &s.charge_settings(), reference.as_ref(), s.hbar())?
            };
            let text = to_pretty(&charge_json(&s, *gauge, *transformed, &report));
            match json {
                Some(path) => write_file(path, &text)?,
                None => print!("{}", text),
            }
            Ok(EXIT_OK)
        }
        Command::Decompose { matrix } => {
            let m = read_matrix(matrix)?;
            let d = Decomposition::of(&m)?;
            for (label, value) in d.labelled() {
                println!("{} = {:.16e}", label, value);
            }
            Ok(EXIT_OK)
        }
    }
}

fn load_scenario(arg: &ScenarioArg, config: &RunConfig) -> Result<Scenario> {
    let name = arg
        .scenario
        .as_deref()
        .or(config.scenario.as_deref())
        .ok_or_else(|| Error::InvalidParameter("no scenario given".into()))?;
    let id: ScenarioId = name.parse()?;
    make_scenario(id, &config.overrides)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Shortest decimal string that round-trips.
fn float_string(x: f64) -> Value {
    Value::String(format!("{:e}", x))
}

/// Replaces every float in `v` by its decimal string.
pub fn floats_as_strings(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => float_string(n.as_f64().expect("f64 number")),
        Value::Array(items) => Value::Array(items.into_iter().map(floats_as_strings).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, floats_as_strings(v))).collect()),
        other => other,
    }
}

pub fn report_json(report: &VerificationReport) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    // Non-finite values serialize as null; keep them visible instead.
    if let Some(checks) = v.get_mut("checks").and_then(Value::as_array_mut) {
        for (c, check) in checks.iter_mut().zip(&report.checks) {
            c["measured"] = float_string(check.measured);
        }
    }
    if let Some(diags) = v.get_mut("diagnostics").and_then(Value::as_array_mut) {
        for (d, diag) in diags.iter_mut().zip(&report.diagnostics) {
            d["value"] = float_string(diag.value);
        }
    }
    floats_as_strings(v)
}

pub fn report_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", report.scenario);
    for c in &report.checks {
        let relation = if c.upper_bound { "<=" } else { ">=" };
        let _ = writeln!(
            out,
            "{} [{:>2}] {:<58} {:>12.4e} {} {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.criterion,
            c.name,
            c.measured,
            relation,
            c.tolerance
        );
    }
    for d in &report.diagnostics {
        let _ = writeln!(out, "note {:<64} {:>12.4e}", d.name, d.value);
    }
    let _ = writeln!(out, "overall {}", if report.pass { "PASS" } else { "FAIL" });
    out
}

fn matrix_json(m: &CMatrix) -> Value {
    let part = |f: fn(&crate::linalg::C64) -> f64| -> Value {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| float_string(f(&m[(i, j)]))).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into()
    };
    json!({ "re": part(|z| z.re), "im": part(|z| z.im) })
}

fn charge_json(s: &Scenario, gauge: usize, transformed: bool, report: &ChargeReport) -> Value {
    let decomposition: serde_json::Map<String, Value> =
        report.decomposition.labelled().into_iter().map(|(k, v)| (k, float_string(v))).collect();
    let surface = report.surface.as_ref().map(|sc| {
        json!({
            "caps": sc.caps.iter().map(|&c| float_string(c)).collect::<Vec<_>>(),
            "values": sc.values.iter().map(matrix_json).collect::<Vec<_>>(),
            "extrapolated": matrix_json(&sc.extrapolated),
        })
    });
    json!({
        "scenario": s.id.as_str(),
        "gauge": if transformed { Value::Null } else { Value::from(s.gauges.get(gauge).map(|g| g.name)) },
        "transformed": transformed,
        "radius": float_string(report.radius),
        "charge": matrix_json(&report.charge),
        "decomposition": decomposition,
        "scalar_charge": report.scalar_charge.map(float_string),
        "eigenvalues": report.eigenvalues.iter().map(|&e| float_string(e)).collect::<Vec<_>>(),
        "g_north": matrix_json(&report.g_north),
        "g_south": matrix_json(&report.g_south),
        "string": {
            "flux_north": matrix_json(&report.string.flux_north),
            "flux_south": matrix_json(&report.string.flux_south),
            "detectability_residual": float_string(report.string.detectability_residual),
            "undetectable": report.string.undetectable,
        },
        "surface": surface,
        "surface_agreement": report.surface_agreement().map(float_string),
        "pole_spread": float_string(report.pole_spread),
        "raw_variation": float_string(report.raw_variation),
        "pole_variation": float_string(report.pole_variation),
        "commutator_with_profile": float_string(report.commutator_with_profile),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

pub fn parse_matrix(text: &str, json_format: bool) -> Result<CMatrix> {
    let raw: MatrixFile = if json_format {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    };
    let n = raw.re.len();
    let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
    if n == 0 || !square(&raw.re) || raw.im.as_ref().is_some_and(|im| !square(im)) {
        return Err(Error::Parse("matrix must be square with matching re and im parts".into()));
    }
    let mut m = linalg::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let im = raw.im.as_ref().map_or(0.0, |rows| rows[i][j]);
            m[(i, j)] = linalg::c(raw.re[i][j], im);
        }
    }
    Ok(m)
}

fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
    let json_format = path.extension().is_some_and(|e| e == "json");
    parse_matrix(&text, json_format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_become_strings() {
        let v = floats_as_strings(json!({ "a": 0.1, "n": 3, "list": [1.5, true] }));
        assert_eq!(v, json!({ "a": "1e-1", "n": 3, "list": ["1.5e0", true] }));
    }

    #[test]
    fn matrix_files() {
        let m = parse_matrix("re = [[1, 0], [0, -1]]\n", false).unwrap();
        assert_eq!(m[(1, 1)].re, -1.0);
        let m = parse_matrix(r#"{"re": [[0, 0], [0, 0]], "im": [[0, -1], [1, 0]]}"#, true).unwrap();
        assert_eq!(m[(0, 1)].im, -1.0);
        assert!(parse_matrix("re = [[1, 0], [0]]\n", false).is_err());
        assert!(parse_matrix("re = [[1.0]]\nextra = 1\n", false).is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(execute(["darkgauge", "verify", "no-such-scenario"]), EXIT_USAGE);
        assert_eq!(execute(["darkgauge", "bogus"]), EXIT_USAGE);
        assert_eq!(execute(["darkgauge", "sample", "rb-monopole-jx", "--grid", "x=1:0:2"]), EXIT_USAGE);
    }
}
