//! Reference values computed independently of the library and frozen here.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use darkgauge::beams::{evaluate_rabi, Point, Side};
use darkgauge::config::Overrides;
use darkgauge::gauge_fields::{magnetic_field, scalar_potential_numeric};
use darkgauge::linalg::{self, c, real, CMatrix};
use darkgauge::monopole::charge_report;
use darkgauge::scenarios::{make_scenario, ScenarioId};
use darkgauge::su3::{pauli_x, spin1_operators, Decomposition};
use darkgauge::verify::azimuthal_profile;

fn scenario(id: ScenarioId) -> darkgauge::scenarios::Scenario {
    make_scenario(id, &Overrides::default()).unwrap()
}

#[test]
fn rubidium_rabi_values_at_unit_cube_corner() {
    // Direct substitution: ρ = √2, φ = π/4, z = x = 1, Ω₀ = R = k = 1.
    let want = [
        (Side::Left, 1, c(1.3817732906760363, 0.30116867893975685)),
        (Side::Left, 2, c(-0.30116867893975674, 1.3817732906760363)),
        (Side::Left, 3, c(0.5403023058681398, 0.8414709848078965)),
        (Side::Right, 1, c(1.3817732906760363, 0.30116867893975685)),
        (Side::Right, 2, c(-0.30116867893975674, 1.3817732906760363)),
        (Side::Right, 3, c(0.5403023058681398, 0.8414709848078965)),
    ];
    let s = scenario(ScenarioId::RbMonopoleJx);
    let values = evaluate_rabi(&s.rabi, &Point::new(1.0, 1.0, 1.0));
    for (side, label, w) in want {
        assert!((values.get(side, label) - w).norm() < 1e-14, "{:?}{}", side, label);
    }
}

#[test]
fn rubidium_rabi_values_on_axes() {
    let s = scenario(ScenarioId::RbMonopoleJx);
    let v = evaluate_rabi(&s.rabi, &Point::new(1.0, 0.0, 0.0));
    for side in [Side::Left, Side::Right] {
        assert!((v.get(side, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((v.get(side, 2) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(v.get(side, 3).norm(), 0.0);
    }
    let v = evaluate_rabi(&s.rabi, &Point::new(0.0, 0.0, 1.0));
    for side in [Side::Left, Side::Right] {
        assert_eq!(v.get(side, 1).norm(), 0.0);
        assert_eq!(v.get(side, 2).norm(), 0.0);
        assert!((v.get(side, 3) - c(1.0, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn monopole_term_at_45_degrees() {
    // r = 1, θ = π/4, azimuth 0: A_φ carries −cotθ/r · J_x, so its (1,2) entry is −1/√2.
    let s = scenario(ScenarioId::RbMonopoleJx);
    let p = Point::from_spherical(1.0, FRAC_PI_4, 0.0);
    let expected = s.gauges[0].expected.as_ref().unwrap().connection(&p, 1.0).unwrap();
    let a_phi = expected.along(&p.e_phi());
    assert!((a_phi[(0, 1)] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    assert!((a_phi[(1, 2)] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    let numeric = s.numeric_connection(0).unwrap().connection(&p).unwrap();
    assert!(numeric.max_abs_diff(&expected) < 1e-6);
}

#[test]
fn equator_connection_and_scalar_potential() {
    // cosθ = 0 removes the monopole term; A = k(ê_z − ê_x) diag(1, 0, 1) and Φ = 𝟙/2.
    let s = scenario(ScenarioId::RbMonopoleJx);
    let p = Point::new(1.0, 0.0, 0.0);
    let a = s.numeric_connection(0).unwrap().connection(&p).unwrap();
    let diag = linalg::real_matrix(3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(linalg::max_abs_diff(&a.components[0], &(-&diag)) < 1e-6);
    assert!(linalg::max_abs(&a.components[1]) < 1e-6);
    assert!(linalg::max_abs_diff(&a.components[2], &diag) < 1e-6);
    let frames = s.numeric_frames(0).unwrap();
    let phi = scalar_potential_numeric(frames.as_ref(), &p, 1e-5, 1.0, 1.0).unwrap();
    assert!(linalg::max_abs_diff(&phi.value, &(linalg::identity(3) * real(0.5))) < 1e-6);
    let closed = s.expected_scalar_potential(&p).unwrap();
    assert!(linalg::max_abs_diff(&closed, &(linalg::identity(3) * real(0.5))) < 1e-14);
}

#[test]
fn spin_orbit_connection_is_constant_and_curved() {
    let s = scenario(ScenarioId::RbSoCoupling);
    let a = s.numeric_connection(0).unwrap();
    let a0 = a.connection(&Point::new(0.3, 0.4, 0.5)).unwrap();
    for p in [Point::new(-1.0, 2.0, 0.1), Point::new(5.0, -3.0, 2.0)] {
        assert!(a.connection(&p).unwrap().max_abs_diff(&a0) < 1e-8);
    }
    // Constant connection: B_i = ε_ijk A_j A_k / (iħ), no derivatives involved.
    let p = Point::new(0.3, 0.4, 0.5);
    let b = magnetic_field(a.as_ref(), &p, 1e-4, 1.0).unwrap().value;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let want = linalg::commutator(&a0.components[j], &a0.components[k]) * c(0.0, -1.0);
        assert!(linalg::max_abs_diff(&b.components[i], &want) < 1e-6);
    }
    assert!(b.max_abs() > 0.1);
}

#[test]
fn tripod_shared_pair_profile_is_the_u2_monopole() {
    // Azimuthal mean of r sinθ A_φ/ħ in the |D⟩ basis: cosθ σ_x.
    let s = scenario(ScenarioId::U2Tripod);
    let a = s.numeric_connection(1).unwrap();
    for theta in [0.4, 1.0, 2.2] {
        let g = azimuthal_profile(a.as_ref(), &Point::from_spherical(0.8, theta, 0.0), 16, 1.0).unwrap();
        assert!(linalg::max_abs_diff(&g, &(pauli_x() * real(theta.cos()))) < 1e-6, "θ = {}", theta);
    }
}

#[test]
fn strontium_transformed_charge_is_minus_two_jz() {
    let s = scenario(ScenarioId::SrMonopole);
    let t = s.transform.as_ref().unwrap();
    let a = s.transformed_connection().unwrap().unwrap();
    let report = charge_report(a, 1.0, &s.transformed_charge_settings(), Some(&t.reference), 1.0).unwrap();
    let jz = spin1_operators(1.0).jz;
    assert!(linalg::max_abs_diff(&report.charge, &(jz * real(-2.0))) < 1e-3);
    // −2 J_z = −2 g_3 − 2√3 g_8 on the Gell-Mann basis.
    let Decomposition::GellMann(coeffs) = report.decomposition else { panic!("expected a 3×3 decomposition") };
    assert!((coeffs.get(3) + 2.0).abs() < 1e-3);
    assert!((coeffs.get(8) + 2.0 * 3f64.sqrt()).abs() < 1e-3);
}

#[test]
fn spin_one_generators_on_the_gell_mann_basis() {
    let ops = spin1_operators(1.0);
    let Decomposition::GellMann(jx) = Decomposition::of(&ops.jx).unwrap() else { unreachable!() };
    let Decomposition::GellMann(jxt) = Decomposition::of(&ops.jx_tilde).unwrap() else { unreachable!() };
    for i in 1..=8 {
        let (w, wt) = match i {
            1 => (SQRT_2, SQRT_2),
            6 => (SQRT_2, -SQRT_2),
            _ => (0.0, 0.0),
        };
        assert!((jx.get(i) - w).abs() < 1e-12);
        assert!((jxt.get(i) - wt).abs() < 1e-12);
    }
    let doubled: CMatrix = spin1_operators(2.0).jx;
    assert!(linalg::max_abs_diff(&doubled, &(ops.jx * real(2.0))) < 1e-15);
}
