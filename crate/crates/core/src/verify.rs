//! End-to-end checks of a scenario against its closed forms.

use std::f64::consts::{SQRT_2, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use std::collections::BTreeMap;

use crate::beams::{evaluate_rabi, BeamSpec, ParamField, Point, RabiConfiguration, RabiParamField, Scheme, StepRule};
use crate::config::{NumericSettings, SampleCounts, Tolerances, Units};
use crate::dark_states::{coupling_hamiltonian, AnalyticFrames, DarkFrame, GaugeTag, NumericFrames};
use crate::error::Result;
use crate::gauge_fields::{
    connection_numeric, magnetic_field, minimal_coupling_terms, scalar_potential_closed_form,
    scalar_potential_numeric, ScalarCoefficients, ConnectionField, TransformedConnection, UnitaryField, UnitaryFn,
};
use crate::linalg::{self, real, CMatrix};
use crate::monopole::{charge_report, coefficient_along, ChargeReport};
use crate::sampling::{sample_csv, AxisRange, FieldKind, GridSpec, SampleRequest};
use crate::scenarios::{make_scenario, ExpectedConnection, SafeRegion, Scenario, ScenarioId};
use crate::su3::{self, decompose_hermitian, gellmann_basis, gellmann_matrix, spin1_operators, Decomposition};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion the check belongs to.
    pub criterion: u8,
    /// Quantity being compared.
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    /// `true` when the measured value must stay below the tolerance, `false` when above.
    pub upper_bound: bool,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, criterion: u8, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            criterion,
            anchor: anchor.into(),
            measured,
            tolerance,
            upper_bound: true,
            pass: measured <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, criterion: u8, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            criterion,
            anchor: anchor.into(),
            measured,
            tolerance,
            upper_bound: false,
            pass: measured >= tolerance,
        }
    }

    /// Records a computation that could not be carried out.
    pub fn failed(name: impl Into<String>, criterion: u8, anchor: &str, tolerance: f64) -> Self {
        Self { pass: false, ..Self::at_most(name, criterion, anchor, f64::NAN, tolerance) }
    }
}

/// Settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub units: Units,
    pub numerics: NumericSettings,
    pub right_k_sign: f64,
    pub tolerances: Tolerances,
    pub samples: SampleCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Values worth reporting that are not pass/fail.
    pub diagnostics: Vec<Diagnostic>,
    pub environment: Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

struct Collector {
    checks: Vec<Check>,
    diagnostics: Vec<Diagnostic>,
}

impl Collector {
    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn note(&mut self, name: impl Into<String>, value: f64) {
        self.diagnostics.push(Diagnostic { name: name.into(), value });
    }

    /// Pushes the check built from `f`, or a failed check if `f` errors.
    fn try_push(&mut self, name: &str, criterion: u8, anchor: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        match f() {
            Ok(v) => self.push(Check::at_most(name, criterion, anchor, v, tolerance)),
            Err(e) => {
                self.note(format!("{}: {}", name, e), f64::NAN);
                self.push(Check::failed(name, criterion, anchor, tolerance));
            }
        }
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc: f64, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) })
}

pub fn verify_scenario(s: &Scenario, tol: &Tolerances, samples: &SampleCounts) -> Result<VerificationReport> {
    let mut out = Collector { checks: Vec::new(), diagnostics: Vec::new() };
    let region = SafeRegion::default();
    dark_state_checks(s, tol, samples, &region, &mut out);
    connection_checks(s, tol, samples, &region, &mut out);
    if s.scheme().is_two_tripod() {
        scalar_checks(s, tol, samples, &region, &mut out);
    }
    match s.id {
        ScenarioId::RbMonopoleJx | ScenarioId::RbMonopoleJxTilde => rubidium_charge_checks(s, tol, &mut out),
        ScenarioId::SrMonopole => strontium_charge_checks(s, tol, &mut out),
        ScenarioId::U2Tripod => tripod_checks(s, tol, samples, &region, &mut out),
        ScenarioId::RbSoCoupling => spin_orbit_checks(s, tol, &mut out),
    }
    if matches!(s.id, ScenarioId::RbMonopoleJx | ScenarioId::RbMonopoleJxTilde | ScenarioId::SrMonopole) {
        subspace_check(s, tol, samples, &region, &mut out);
    }
    if let Ok(base) = s.numeric_connection(0) {
        for c in covariance_checks(base, s, tol, samples, &region) {
            out.push(c);
        }
    }
    for c in algebra_checks(tol) {
        out.push(c);
    }
    determinism_check(s, &mut out);
    let pass = out.checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        scenario: s.id.as_str().to_string(),
        checks: out.checks,
        pass,
        diagnostics: out.diagnostics,
        environment: Environment {
            units: s.overrides.units,
            numerics: s.overrides.numerics,
            right_k_sign: s.overrides.right_k_sign,
            tolerances: *tol,
            samples: *samples,
        },
    })
}

struct DarkStats {
    analytic_residual: f64,
    analytic_ortho: f64,
    numeric_residual: f64,
    numeric_ortho: f64,
    numeric_excited: f64,
}

fn dark_state_checks(s: &Scenario, tol: &Tolerances, samples: &SampleCounts, region: &SafeRegion, out: &mut Collector) {
    let points = s.safe_points(samples.dark_points, samples.seed, region);
    for (g, view) in s.gauges.iter().enumerate() {
        let stats: Result<Vec<DarkStats>> = points
            .par_iter()
            .map(|p| {
                let values = evaluate_rabi(&s.rabi, p);
                let h = coupling_hamiltonian(&values, s.scheme(), s.hbar());
                let norm = h.norm();
                let analytic = DarkFrame { vectors: s.analytic_frames(g)?.frame(p)?, gauge: view.tag };
                let numeric = DarkFrame { vectors: s.numeric_frames(g)?.frame(p)?, gauge: GaugeTag::AlignedNumeric };
                Ok(DarkStats {
                    analytic_residual: analytic.annihilation_residual(&h) / norm,
                    analytic_ortho: analytic.orthonormality_error(),
                    numeric_residual: numeric.annihilation_residual(&h) / norm,
                    numeric_ortho: numeric.orthonormality_error(),
                    numeric_excited: numeric.excited_weight(s.scheme()),
                })
            })
            .collect();
        let prefix = format!("dark-{}", view.name);
        match stats {
            Ok(stats) => {
                let m = |f: fn(&DarkStats) -> f64| max_of(stats.iter().map(f));
                let anchor = "dark-state condition";
                out.push(Check::at_most(format!("{}-analytic-annihilation", prefix), 1, anchor, m(|d| d.analytic_residual), tol.dark_annihilation));
                out.push(Check::at_most(format!("{}-analytic-orthonormality", prefix), 1, anchor, m(|d| d.analytic_ortho), tol.orthonormality));
                out.push(Check::at_most(format!("{}-numeric-annihilation", prefix), 1, anchor, m(|d| d.numeric_residual), tol.dark_annihilation));
                out.push(Check::at_most(format!("{}-numeric-orthonormality", prefix), 1, anchor, m(|d| d.numeric_ortho), tol.orthonormality));
                out.push(Check::at_most(format!("{}-numeric-excited-weight", prefix), 1, anchor, m(|d| d.numeric_excited), tol.numeric_excited_weight));
            }
            Err(e) => {
                out.note(format!("{}: {}", prefix, e), f64::NAN);
                out.push(Check::failed(prefix, 1, "dark-state condition", tol.dark_annihilation));
            }
        }
    }
}

/// `g = r sinθ ⟨A_φ⟩/ħ` averaged over `n` azimuths at the polar angle and radius of `p`.
pub fn azimuthal_profile(a: &dyn ConnectionField, p: &Point, n: usize, hbar: f64) -> Result<CMatrix> {
    let (r, theta) = (p.r(), p.theta());
    let mut sum = linalg::zeros(a.dim());
    for j in 0..n {
        let q = Point::from_spherical(r, theta, TAU * j as f64 / n as f64);
        sum += a.connection(&q)?.along(&q.e_phi());
    }
    Ok(sum * real(r * theta.sin() / (hbar * n as f64)))
}

fn connection_checks(s: &Scenario, tol: &Tolerances, samples: &SampleCounts, region: &SafeRegion, out: &mut Collector) {
    let points = s.safe_points(samples.connection_points, samples.seed.wrapping_add(1), region);
    let hbar = s.hbar();
    let step = s.connection_step();
    for (g, view) in s.gauges.iter().enumerate() {
        let name = view.name;
        let numeric = match (s.numeric_frames(g), s.numeric_connection(g)) {
            (Ok(f), Ok(c)) => (f, c),
            _ => continue,
        };
        let (frames, conn) = numeric;
        out.try_push(&format!("connection-{}-hermiticity", name), 2, "Hermitian connection", tol.hermiticity, || {
            let res: Result<Vec<f64>> = points
                .par_iter()
                .map(|p| Ok(connection_numeric(frames.as_ref(), p, step.step(p), hbar)?.residual))
                .collect();
            Ok(max_of(res?))
        });
        if let Ok(Some(closed)) = s.closed_form_connection(g) {
            out.try_push(&format!("connection-{}-closed-form-vs-numeric", name), 2, "connection formula", tol.connection, || {
                let res: Result<Vec<f64>> = points
                    .par_iter()
                    .map(|p| Ok(closed.connection(p)?.max_abs_diff(&conn.connection(p)?)))
                    .collect();
                Ok(max_of(res?))
            });
        }
        let Some(expected) = &view.expected else { continue };
        if expected.is_full() {
            out.try_push(&format!("connection-{}-reference-vs-numeric", name), 2, "reference connection", tol.connection, || {
                let res: Result<Vec<f64>> = points
                    .par_iter()
                    .map(|p| Ok(expected.connection(p, hbar).expect("full form").max_abs_diff(&conn.connection(p)?)))
                    .collect();
                Ok(max_of(res?))
            });
        } else {
            out.try_push(&format!("connection-{}-reference-profile-vs-numeric", name), 2, "reference angular profile", tol.connection, || {
                let res: Result<Vec<f64>> = points
                    .par_iter()
                    .map(|p| {
                        let g_num = azimuthal_profile(conn.as_ref(), p, 8, hbar)?;
                        Ok(linalg::max_abs_diff(&g_num, &expected.profile(p.theta()).expect("profile form")))
                    })
                    .collect();
                Ok(max_of(res?))
            });
        }
    }
}

fn scalar_checks(s: &Scenario, tol: &Tolerances, samples: &SampleCounts, region: &SafeRegion, out: &mut Collector) {
    let points = s.safe_points(samples.scalar_points, samples.seed.wrapping_add(2), region);
    let u = s.overrides.units;
    let step = s.connection_step();
    let Ok(frames) = s.numeric_frames(0) else { return };
    // (corrected, literal, hermiticity, smallest eigenvalue, three-level closed form)
    type Row = (f64, f64, f64, f64, Option<f64>);
    let rows: Result<Vec<Row>> = points
        .par_iter()
        .map(|p| {
            let params = s.params.params(p)?;
            let grads = s.params.gradients(p)?;
            let corrected = scalar_potential_closed_form(&params, &grads, u.hbar, u.mass, ScalarCoefficients::Corrected)?;
            let literal = scalar_potential_closed_form(&params, &grads, u.hbar, u.mass, ScalarCoefficients::Literal)?;
            let numeric = scalar_potential_numeric(frames.as_ref(), p, step.step(p), u.hbar, u.mass)?;
            let min_eig = linalg::hermitian_eigenvalues(&corrected)[0] / linalg::max_abs(&corrected).max(f64::MIN_POSITIVE);
            let appendix_c = s.expected_scalar_potential(p).map(|m| linalg::max_abs_diff(&m, &corrected));
            Ok((
                linalg::max_abs_diff(&corrected, &numeric.value),
                linalg::max_abs_diff(&literal, &numeric.value),
                numeric.residual,
                min_eig,
                appendix_c,
            ))
        })
        .collect();
    out.try_push("scalar-random-config-closed-form-vs-numeric", 7, "scalar potential", tol.scalar_numeric, || {
        random_config_scalar_residual(s, samples, region)
    });
    match rows {
        Ok(rows) => {
            let anchor = "scalar potential";
            out.push(Check::at_most("scalar-closed-form-vs-numeric", 7, anchor, max_of(rows.iter().map(|r| r.0)), tol.scalar_numeric));
            out.note("scalar-literal-coefficients-vs-numeric", max_of(rows.iter().map(|r| r.1)));
            out.push(Check::at_most("scalar-numeric-hermiticity", 7, anchor, max_of(rows.iter().map(|r| r.2)), tol.hermiticity));
            let min_eig = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
            out.push(Check::at_least("scalar-positive-semidefinite", 7, anchor, min_eig, -tol.positivity));
            if rows.iter().all(|r| r.4.is_some()) {
                out.push(Check::at_most(
                    "scalar-three-level-closed-form",
                    7,
                    anchor,
                    max_of(rows.iter().map(|r| r.4.unwrap_or(f64::NAN))),
                    tol.scalar_closed_form,
                ));
            }
        }
        Err(e) => {
            out.note(format!("scalar: {}", e), f64::NAN);
            out.push(Check::failed("scalar-closed-form-vs-numeric", 7, "scalar potential", tol.scalar_numeric));
        }
    }
}

/// Six beams with random amplitudes, windings and wave vectors on the scheme of `s`.
pub fn random_smooth_configuration(scheme: Scheme, units: &Units, seed: u64) -> Result<RabiConfiguration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beams = BTreeMap::new();
    for (i, key) in scheme.keys().into_iter().enumerate() {
        let amplitude = units.omega0 * rng.random_range(0.5..1.5);
        let wavevector: [f64; 3] = std::array::from_fn(|_| units.k * rng.random_range(-1.0..1.0));
        // Alternate ring-shaped and uniform envelopes so the mixing angles vary in space.
        let mut beam = if i % 2 == 0 {
            BeamSpec::laguerre_gauss(amplitude, rng.random_range(-1..=1), wavevector, units.beam_scale)
        } else {
            BeamSpec::plane_wave(amplitude, 1.0, wavevector)
        };
        beam.phase_offset = rng.random_range(0.0..TAU);
        beams.insert(key, beam);
    }
    RabiConfiguration::new(scheme, beams)
}

/// Largest entrywise gap between the closed-form scalar potential of a random configuration,
/// fed with finite-difference parameter gradients, and the projection formula.
fn random_config_scalar_residual(s: &Scenario, samples: &SampleCounts, region: &SafeRegion) -> Result<f64> {
    let u = s.overrides.units;
    let config = Arc::new(random_smooth_configuration(s.scheme(), &u, samples.seed.wrapping_add(4))?);
    let step = StepRule::new(s.overrides.numerics.connection_step, u.k);
    let params = Arc::new(RabiParamField { rabi: config.clone(), step });
    let reference = Arc::new(AnalyticFrames { params: params.clone(), scheme: s.scheme(), gauge: GaugeTag::TwoTripod, guard: None });
    let frames = NumericFrames { rabi: config, reference };
    let points = s.safe_points(samples.scalar_points, samples.seed.wrapping_add(4), region);
    let res: Result<Vec<f64>> = points
        .par_iter()
        .map(|p| {
            let closed = scalar_potential_closed_form(&params.params(p)?, &params.gradients(p)?, u.hbar, u.mass, ScalarCoefficients::Corrected)?;
            let numeric = scalar_potential_numeric(&frames, p, step.step(p), u.hbar, u.mass)?;
            Ok(linalg::max_abs_diff(&closed, &numeric.value))
        })
        .collect();
    Ok(max_of(res?))
}

/// Rubidium and strontium frames never span the same dark subspace.
fn subspace_check(s: &Scenario, tol: &Tolerances, samples: &SampleCounts, region: &SafeRegion, out: &mut Collector) {
    let other = if s.id == ScenarioId::SrMonopole { ScenarioId::RbMonopoleJx } else { ScenarioId::SrMonopole };
    out.try_push(
        &format!("dark-subspace-differs-from-{}", other),
        1,
        "dark subspaces of the two schemes",
        1.0 - tol.subspace,
        || {
            let partner = make_scenario(other, &s.overrides)?;
            let (mine, theirs) = (s.analytic_frames(0)?, partner.analytic_frames(0)?);
            let points = s.safe_points(samples.connection_points, samples.seed.wrapping_add(5), region);
            let res: Result<Vec<f64>> = points
                .par_iter()
                .map(|p| {
                    let overlap = mine.frame(p)?.adjoint() * theirs.frame(p)?;
                    Ok(linalg::singular_values(&overlap).into_iter().fold(f64::INFINITY, f64::min))
                })
                .collect();
            Ok(max_of(res?))
        },
    );
}

/// Two sweeps of the same grid must give byte-identical CSV.
fn determinism_check(s: &Scenario, out: &mut Collector) {
    let big_r = s.overrides.units.beam_scale;
    let grid = GridSpec::Cartesian {
        x: AxisRange { min: -big_r, max: big_r, count: 3 },
        y: AxisRange { min: 0.5 * big_r, max: 0.5 * big_r, count: 1 },
        z: AxisRange { min: -big_r, max: big_r, count: 3 },
    };
    let request = SampleRequest { field: FieldKind::Magnetic, gauge: 0, transformed: false };
    out.try_push("sample-byte-identical", 11, "deterministic output", 0.0, || {
        let first = sample_csv(s, &grid, &request)?;
        let second = sample_csv(s, &grid, &request)?;
        Ok(if first == second { 0.0 } else { 1.0 })
    });
}

/// `Q` normalized by its largest eigenvalue modulus.
fn coupling_matrix(q: &CMatrix) -> CMatrix {
    let top = linalg::hermitian_eigenvalues(q).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    q * real(1.0 / top)
}

fn charge_checks_common(
    prefix: &str,
    criterion: u8,
    report: &ChargeReport,
    expected: &CMatrix,
    scalar: Option<f64>,
    tol: &Tolerances,
    out: &mut Collector,
) {
    let anchor = "monopole charge";
    out.push(Check::at_most(format!("{}-matrix", prefix), criterion, anchor, linalg::max_abs_diff(&report.charge, expected), tol.charge));
    if let (Some(want), Some(got)) = (scalar, report.scalar_charge) {
        out.push(Check::at_most(format!("{}-scalar", prefix), criterion, anchor, (got - want).abs(), tol.charge));
    }
    if let Some(surface) = &report.surface {
        out.push(Check::at_most(
            format!("{}-surface-route", prefix),
            criterion,
            "flux through a sphere",
            linalg::max_abs_diff(&surface.extrapolated, expected),
            tol.charge,
        ));
    }
    out.note(format!("{}-pole-spread", prefix), report.pole_spread);
    out.note(format!("{}-pole-variation", prefix), report.pole_variation);
    out.note(format!("{}-raw-variation", prefix), report.raw_variation);
}

fn rubidium_charge_checks(s: &Scenario, tol: &Tolerances, out: &mut Collector) {
    let view = &s.gauges[0];
    let (Some(expected), Some(reference)) = (&view.expected_charge, &view.reference) else { return };
    let flipped = s.id == ScenarioId::RbMonopoleJxTilde;
    let criterion = if flipped { 4 } else { 3 };
    let label = if flipped { "charge-Jx-tilde" } else { "charge-Jx" };
    let r = s.overrides.units.beam_scale;
    let result = s
        .numeric_connection(0)
        .and_then(|a| charge_report(a, r, &s.charge_settings(), Some(reference), s.hbar()));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            out.note(format!("{}: {}", label, e), f64::NAN);
            out.push(Check::failed(label, criterion, "monopole charge", tol.charge));
            return;
        }
    };
    charge_checks_common(label, criterion, &report, expected, None, tol, out);
    let scalar = report.scalar_charge.map_or(f64::NAN, |q| (q - 1.0).abs());
    out.push(Check::at_most(format!("{} = +1", label), criterion, "monopole charge", scalar, tol.charge));
    out.push(Check::at_most(
        format!("{}-string-undetectable", label),
        criterion,
        "Dirac string phase",
        report.string.detectability_residual,
        crate::monopole::DETECTABILITY_TOLERANCE,
    ));
    out.push(Check::at_most(
        format!("{}-commutes-with-profile", label),
        criterion,
        "monopole charge",
        report.commutator_with_profile,
        tol.charge,
    ));
    // Coupling matrix on the Gell-Mann basis: c1 = √2, c6 = ±√2, everything else zero.
    match decompose_hermitian(&coupling_matrix(&report.charge)) {
        Ok(c) => {
            let sign6 = if flipped { -1.0 } else { 1.0 };
            let mut dev = (c.c0).abs();
            for i in 1..=8 {
                let want = match i {
                    1 => SQRT_2,
                    6 => sign6 * SQRT_2,
                    _ => 0.0,
                };
                dev = dev.max((c.get(i) - want).abs());
            }
            out.push(Check::at_most(format!("{}-gell-mann-coefficients", label), criterion, "coupling matrix", dev, tol.generator));
        }
        Err(_) => out.push(Check::failed(format!("{}-gell-mann-coefficients", label), criterion, "coupling matrix", tol.generator)),
    }
}

/// Charges along each reference profile term, measured and read off the reference profile.
fn term_charge_checks(
    prefix: &str,
    criterion: u8,
    report: &ChargeReport,
    expected: &ExpectedConnection,
    expected_charge: &CMatrix,
    tol: &Tolerances,
    out: &mut Collector,
) {
    for term in expected.terms() {
        let want = coefficient_along(expected_charge, &term.matrix);
        let got = coefficient_along(&report.charge, &term.matrix);
        let anchor = "charge of a reference term";
        out.push(Check::at_most(format!("{}-term-{}", prefix, term.name), criterion, anchor, (got - want).abs(), tol.charge));
        out.push(Check::at_most(
            format!("{}-reference-term-{}", prefix, term.name),
            criterion,
            anchor,
            (term.charge() - want).abs(),
            tol.charge,
        ));
    }
}

fn strontium_charge_checks(s: &Scenario, tol: &Tolerances, out: &mut Collector) {
    let Some(transform) = &s.transform else { return };
    let view = &s.gauges[0];
    let settings = s.charge_settings();
    let big_r = s.overrides.units.beam_scale;
    for factor in [0.5, 1.0, 2.0] {
        let r = factor * big_r;
        let prefix = format!("raw-charge-r{}", factor);
        let raw = s.numeric_connection(0).and_then(|a| charge_report(a, r, &settings, None, s.hbar()));
        match raw {
            Ok(report) => {
                if let (Some(expected), Some(q)) = (&view.expected, &view.expected_charge) {
                    term_charge_checks(&prefix, 5, &report, expected, q, tol, out);
                    charge_checks_common(&prefix, 5, &report, q, None, tol, out);
                }
            }
            Err(e) => {
                out.note(format!("{}: {}", prefix, e), f64::NAN);
                out.push(Check::failed(prefix, 5, "monopole charge", tol.charge));
            }
        }
        let prefix = format!("transformed-charge-r{}", factor);
        let rotated = s.transformed_charge_settings();
        let transformed = s
            .transformed_connection()
            .and_then(|a| charge_report(a.expect("transform"), r, &rotated, Some(&transform.reference), s.hbar()));
        match transformed {
            Ok(report) => {
                charge_checks_common(&prefix, 5, &report, &transform.expected_charge, Some(-2.0), tol, out);
                out.note(format!("{}-string-phase-residual", prefix), report.string.detectability_residual);
            }
            Err(e) => {
                out.note(format!("{}: {}", prefix, e), f64::NAN);
                out.push(Check::failed(prefix, 5, "monopole charge", tol.charge));
            }
        }
    }
}

fn tripod_checks(s: &Scenario, tol: &Tolerances, samples: &SampleCounts, region: &SafeRegion, out: &mut Collector) {
    let Some(transform) = &s.transform else { return };
    let settings = s.charge_settings();
    let r = s.overrides.units.beam_scale;
    for (g, view) in s.gauges.iter().enumerate() {
        let prefix = format!("charge-{}", view.name);
        let result = s
            .numeric_connection(g)
            .and_then(|a| charge_report(a, r, &settings, view.reference.as_ref(), s.hbar()));
        match result {
            Ok(report) => {
                if let (Some(expected), Some(q)) = (&view.expected, &view.expected_charge) {
                    term_charge_checks(&prefix, 8, &report, expected, q, tol, out);
                }
                if let Some(q) = &view.expected_charge {
                    let scalar = view.reference.as_ref().map(|m| coefficient_along(q, m));
                    charge_checks_common(&prefix, 8, &report, q, scalar, tol, out);
                }
            }
            Err(e) => {
                out.note(format!("{}: {}", prefix, e), f64::NAN);
                out.push(Check::failed(prefix, 8, "monopole charge", tol.charge));
            }
        }
    }
    let Some(to) = transform.to else { return };
    let points = s.safe_points(samples.connection_points, samples.seed.wrapping_add(3), region);
    let hbar = s.hbar();
    let (Ok(Some(mapped)), Ok(target), Ok(source)) =
        (s.transformed_connection(), s.numeric_connection(to), s.numeric_connection(transform.from))
    else {
        out.push(Check::failed("basis-change-connection", 8, "change of dark basis", tol.transform));
        return;
    };
    out.try_push("basis-change-connection", 8, "change of dark basis", tol.transform, || {
        let res: Result<Vec<f64>> =
            points.par_iter().map(|p| Ok(mapped.connection(p)?.max_abs_diff(&target.connection(p)?))).collect();
        Ok(max_of(res?))
    });
    let h_b = s.curvature_step();
    let unitary = transform.unitary;
    out.try_push("basis-change-curvature", 8, "change of dark basis", tol.curvature, || {
        let res: Result<Vec<f64>> = points
            .par_iter()
            .map(|p| {
                let u = unitary.unitary(p)?;
                let b_source = magnetic_field(source.as_ref(), p, h_b.step(p), hbar)?.value;
                let b_target = magnetic_field(target.as_ref(), p, h_b.step(p), hbar)?.value;
                Ok(b_target.max_abs_diff(&b_source.conjugated(&u)))
            })
            .collect();
        Ok(max_of(res?))
    });
}

fn spin_orbit_checks(s: &Scenario, tol: &Tolerances, out: &mut Collector) {
    let u = s.overrides.units;
    let theta = s.overrides.spin_orbit.theta;
    let k = u.k;
    let hbar = u.hbar;
    let ops = spin1_operators(1.0);
    let g1 = gellmann_matrix(1).expect("valid").into_matrix();
    let g4 = gellmann_matrix(4).expect("valid").into_matrix();
    let g6 = gellmann_matrix(6).expect("valid").into_matrix();
    let beta = 2.0 / (2.0 + theta.tan().powi(2)).sqrt();
    let p = Point::new(0.1, 0.2, 0.3);
    let anchor = "spin-orbit coupling";
    for k3_along_x in [true, false] {
        let (k3_axis, kl_axis) = if k3_along_x { (0, 2) } else { (2, 0) };
        for kr_sign in [1.0, -1.0] {
            let k3 = linalg::axis(k3_axis) * k;
            let kl = linalg::axis(kl_axis) * k;
            let form = ExpectedConnection::SpinOrbit { k3, kl, kr: kl * kr_sign, theta };
            let a = form.connection(&p, hbar).expect("full form");
            let mc = minimal_coupling_terms(&a, hbar, u.mass, k);
            let pattern = (&g1 + &g6 * real(kr_sign)) * real(2.0 * beta);
            let axes = if k3_along_x { "k3x-klz" } else { "k3z-klx" };
            let sign = if kr_sign > 0.0 { "plus" } else { "minus" };
            let dev = linalg::max_abs_diff(&mc.v_so[k3_axis], &ops.jz)
                .max(linalg::max_abs_diff(&mc.v_so[kl_axis], &pattern))
                .max(linalg::max_abs(&mc.v_so[1]));
            out.push(Check::at_most(format!("so-velocity-{}-{}", axes, sign), 6, anchor, dev, tol.algebra));
            if kr_sign < 0.0 && (theta.tan() - SQRT_2).abs() < 1e-12 {
                let want = (linalg::identity(3) - &g4) * real(hbar * hbar * k * k / (4.0 * u.mass));
                out.push(Check::at_most(format!("so-quadratic-{}", axes), 6, anchor, linalg::max_abs_diff(&mc.quadratic, &want), tol.algebra));
            }
        }
    }
    // Same quantities for the connection the beams actually produce.
    if let Ok(conn) = s.numeric_connection(0) {
        if let Ok(a) = conn.connection(&p) {
            let mc = minimal_coupling_terms(&a, hbar, u.mass, k);
            let (k3_axis, kl_axis) = if s.overrides.spin_orbit.k3_along_x { (0, 2) } else { (2, 0) };
            out.note("so-derived-k3-axis-Jz-coefficient", coefficient_along(&mc.v_so[k3_axis], &ops.jz));
            out.note("so-derived-kl-axis-g1-coefficient", coefficient_along(&mc.v_so[kl_axis], &g1));
            out.note("so-derived-kl-axis-g6-coefficient", coefficient_along(&mc.v_so[kl_axis], &g6));
        }
    }
}

/// `exp(i Σ_a f_a(p) G_a)` with smooth random `f_a` over a Hermitian basis of dimension `dim`.
pub fn random_unitary_field(dim: usize, seed: u64) -> impl UnitaryField + Clone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<CMatrix> = match dim {
        2 => vec![linalg::identity(2), su3::pauli_x(), su3::pauli_y(), su3::pauli_z()],
        3 => std::iter::once(linalg::identity(3)).chain(gellmann_basis()).collect(),
        n => vec![linalg::identity(n)],
    };
    let coeffs: Vec<[f64; 8]> = basis.iter().map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
    let field = Arc::new((basis, coeffs));
    let f = move |p: &Point| -> Result<CMatrix> {
        let (basis, coeffs) = field.as_ref();
        let mut h = linalg::zeros(basis[0].nrows());
        for (g, c) in basis.iter().zip(coeffs) {
            let lin = c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.z;
            let wave = c[4] * (2.0 * c[5] * p.x + 1.5 * c[6] * p.y + c[7] * p.z).sin();
            h += g * real(lin + wave);
        }
        Ok(linalg::expm_i_hermitian(&h, 1.0))
    };
    Arc::new(UnitaryFn { dim, f })
}

/// `B' = U B U†` and gauge-invariant radial spectra for random smooth unitaries.
pub fn covariance_checks(
    base: Arc<dyn ConnectionField>,
    s: &Scenario,
    tol: &Tolerances,
    samples: &SampleCounts,
    region: &SafeRegion,
) -> Vec<Check> {
    let hbar = s.hbar();
    let h_a = s.connection_step();
    let h_b = s.curvature_step();
    let dim = base.dim();
    let rows: Result<Vec<(f64, f64)>> = (0..samples.unitary_fields)
        .into_par_iter()
        .map(|i| {
            let seed = samples.seed.wrapping_add(100 + i as u64);
            let unitary: Arc<dyn UnitaryField> = Arc::new(random_unitary_field(dim, seed));
            let transformed =
                TransformedConnection { base: base.clone(), unitary: unitary.clone(), step: h_a, hbar };
            let mut worst = (0.0_f64, 0.0_f64);
            for p in s.safe_points(samples.points_per_unitary, seed, region) {
                let b = magnetic_field(base.as_ref(), &p, h_b.step(&p), hbar)?.value;
                let b_t = magnetic_field(&transformed, &p, h_b.step(&p), hbar)?.value;
                let u = unitary.unitary(&p)?;
                worst.0 = worst.0.max(b_t.max_abs_diff(&b.conjugated(&u)));
                let e = linalg::hermitian_eigenvalues(&b.along(&p.e_r()));
                let e_t = linalg::hermitian_eigenvalues(&b_t.along(&p.e_r()));
                worst.1 = worst.1.max(e.iter().zip(&e_t).fold(0.0, |a, (x, y)| a.max((x - y).abs())));
            }
            Ok(worst)
        })
        .collect();
    let anchor = "gauge covariance";
    match rows {
        Ok(rows) => vec![
            Check::at_most("covariance-curvature", 9, anchor, max_of(rows.iter().map(|r| r.0)), tol.curvature),
            Check::at_most("covariance-radial-spectrum", 9, anchor, max_of(rows.iter().map(|r| r.1)), tol.curvature),
        ],
        Err(_) => vec![Check::failed("covariance-curvature", 9, anchor, tol.curvature)],
    }
}

/// Generator identities of the spin-1 and SU(3) algebra.
pub fn algebra_checks(tol: &Tolerances) -> Vec<Check> {
    let anchor = "generator algebra";
    let g = gellmann_basis();
    let mut ortho: f64 = 0.0;
    for (i, a) in g.iter().enumerate() {
        for (j, b) in g.iter().enumerate() {
            let want = if i == j { 0.5 } else { 0.0 };
            ortho = ortho.max((linalg::trace(&(a * b)) - real(want)).norm());
        }
        ortho = ortho.max(linalg::trace(a).norm());
    }
    let ops = spin1_operators(1.0);
    let i = linalg::I;
    let comm = |a: &CMatrix, b: &CMatrix, c: &CMatrix| linalg::max_abs_diff(&linalg::commutator(a, b), &(c * i));
    let tilde = ops.tilde_triplet();
    let plain = ops.triplet();
    let mut commutation: f64 = 0.0;
    for t in [&tilde, &plain] {
        commutation = commutation
            .max(comm(&t[0], &t[1], &t[2]))
            .max(comm(&t[1], &t[2], &t[0]))
            .max(comm(&t[2], &t[0], &t[1]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut round_trip: f64 = 0.0;
    for _ in 0..50 {
        let mut m = linalg::zeros(3);
        for r in 0..3 {
            m[(r, r)] = real(rng.random_range(-2.0..2.0));
            for c in (r + 1)..3 {
                let z = linalg::c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                m[(r, c)] = z;
                m[(c, r)] = z.conj();
            }
        }
        if let Ok(Decomposition::GellMann(coeffs)) = Decomposition::of(&m) {
            round_trip = round_trip.max(linalg::max_abs_diff(&coeffs.reconstruct(), &m));
        } else {
            round_trip = f64::NAN;
        }
    }
    let (g1, g6) = (&g[0], &g[5]);
    let jx = linalg::max_abs_diff(&ops.jx, &((g1 + g6) * real(SQRT_2)));
    let jx_tilde = linalg::max_abs_diff(&ops.jx_tilde, &((g1 - g6) * real(SQRT_2)));
    vec![
        Check::at_most("algebra-gell-mann-orthonormality", 10, anchor, ortho, tol.algebra),
        Check::at_most("algebra-spin-commutators", 10, anchor, commutation, tol.algebra),
        Check::at_most("algebra-decomposition-round-trip", 10, anchor, round_trip, tol.algebra),
        Check::at_most("algebra-jx-generators", 10, anchor, jx, tol.algebra),
        Check::at_most("algebra-jx-tilde-generators", 10, anchor, jx_tilde, tol.algebra),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_suite_passes() {
        for c in algebra_checks(&Tolerances::default()) {
            assert!(c.pass, "{:?}", c);
        }
    }

    #[test]
    fn check_directions() {
        assert!(Check::at_most("a", 1, "x", 0.5, 1.0).pass);
        assert!(!Check::at_most("a", 1, "x", f64::NAN, 1.0).pass);
        assert!(Check::at_least("a", 1, "x", 2.0, 1.0).pass);
        assert!(!Check::failed("a", 1, "x", 1.0).pass);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        for dim in [2, 3] {
            let u = random_unitary_field(dim, 9);
            let m = u.unitary(&Point::new(0.3, 0.1, -0.2)).unwrap();
            assert!(linalg::unitarity_residual(&m) < 1e-13);
        }
    }
}
