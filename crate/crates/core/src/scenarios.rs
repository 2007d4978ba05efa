//! Preset beam configurations together with the closed forms they should reproduce.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beams::{
    BeamKey, BeamSpec, ParamField, ParamGradients, Point, RabiConfiguration, Scheme, Side, SideGradients, SideParams,
    SingularityGuard, StepRule, TripodParams,
};
use crate::config::Overrides;
use crate::dark_states::{AnalyticFrames, FrameField, GaugeTag, NumericFrames};
use crate::error::{Error, Result};
use crate::gauge_fields::{
    AnalyticConnection, Connection, ConnectionField, TransformedConnection, UnitaryField,
};
use crate::linalg::{self, axis, cis, real, real_matrix, CMatrix, Vec3};
use crate::monopole::ChargeSettings;
use crate::su3::{gellmann_matrix, pauli_x, pauli_z, spin1_operators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    RbMonopoleJx,
    RbMonopoleJxTilde,
    RbSoCoupling,
    SrMonopole,
    U2Tripod,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::RbMonopoleJx,
        ScenarioId::RbMonopoleJxTilde,
        ScenarioId::RbSoCoupling,
        ScenarioId::SrMonopole,
        ScenarioId::U2Tripod,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::RbMonopoleJx => "rb-monopole-jx",
            ScenarioId::RbMonopoleJxTilde => "rb-monopole-jx-tilde",
            ScenarioId::RbSoCoupling => "rb-so-coupling",
            ScenarioId::SrMonopole => "sr-monopole",
            ScenarioId::U2Tripod => "u2-tripod",
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            ScenarioId::RbMonopoleJx | ScenarioId::RbMonopoleJxTilde | ScenarioId::RbSoCoupling => {
                Scheme::Rubidium2Tripod
            }
            ScenarioId::SrMonopole => Scheme::Strontium2Tripod,
            ScenarioId::U2Tripod => Scheme::SingleTripod,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

fn grad_rho(p: &Point) -> Vec3 {
    let rho = p.rho();
    Vec3::new(p.x / rho, p.y / rho, 0.0)
}

fn grad_azimuth(p: &Point) -> Vec3 {
    let rho2 = p.x * p.x + p.y * p.y;
    Vec3::new(-p.y / rho2, p.x / rho2, 0.0)
}

/// Gradient of `atan2(a, b)`.
fn grad_atan2(a: f64, grad_a: Vec3, b: f64, grad_b: Vec3) -> Vec3 {
    (grad_a * b - grad_b * a) / (a * a + b * b)
}

/// Position-dependent tripod angles written without the branch cuts of the canonical
/// parametrization, with exact gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetParams {
    /// Vortex pairs on the outer legs, `z`-node on the shared leg.
    Rubidium { omega_scale: f64, k: f64, right_k_sign: f64, flipped: bool },
    Strontium { omega_scale: f64, k: f64 },
    SpinOrbit { omega: f64, theta: f64, k3: Vec3, kl: Vec3, kr: Vec3 },
    /// Single tripod with the right side decoupled.
    Tripod { omega_scale: f64, k: f64 },
}

impl PresetParams {
    fn evaluate(&self, p: &Point) -> (TripodParams, ParamGradients) {
        let pos = p.vec();
        let ez = axis(2);
        let ex = axis(0);
        match *self {
            PresetParams::Rubidium { omega_scale, k, right_k_sign: s, flipped } => {
                let (rho, z, az) = (p.rho(), p.z, p.azimuth());
                let theta = (SQRT_2 * rho).atan2(z);
                let g_theta = grad_atan2(SQRT_2 * rho, grad_rho(p) * SQRT_2, z, ez);
                let g_az = grad_azimuth(p);
                let omega = omega_scale * (2.0 * rho * rho + z * z).sqrt();
                let w = if flipped { 1.0 } else { -1.0 };
                let left = SideParams { omega, theta, phi: FRAC_PI_4, phases: [k * z - az, k * z + az, k * p.x] };
                let right = SideParams {
                    omega,
                    theta,
                    phi: FRAC_PI_4,
                    phases: [s * k * z + w * az, s * k * z - w * az, s * k * p.x],
                };
                let gl = SideGradients {
                    theta: g_theta,
                    phi: Vec3::zeros(),
                    phases: [ez * k - g_az, ez * k + g_az, ex * k],
                };
                let gr = SideGradients {
                    theta: g_theta,
                    phi: Vec3::zeros(),
                    phases: [ez * (s * k) + g_az * w, ez * (s * k) - g_az * w, ex * (s * k)],
                };
                (TripodParams { left, right }, ParamGradients { left: gl, right: gr })
            }
            PresetParams::Strontium { omega_scale, k } => {
                let (rho, z, r, az) = (p.rho(), p.z, p.r(), p.azimuth());
                let g_rho = grad_rho(p);
                let g_r = pos / r;
                let g_az = grad_azimuth(p);
                let theta = r.atan2(rho);
                let phi = z.atan2(rho);
                let g_theta = grad_atan2(r, g_r, rho, g_rho);
                let g_phi = grad_atan2(z, ez, rho, g_rho);
                let omega = omega_scale * (2.0 * rho * rho + z * z).sqrt();
                let left = SideParams { omega, theta, phi, phases: [k * z + az, k * p.x, k * z - az] };
                let right = SideParams { omega, theta, phi, phases: [-k * z - az, -k * p.x, -k * z + az] };
                let gl = SideGradients { theta: g_theta, phi: g_phi, phases: [ez * k + g_az, ex * k, ez * k - g_az] };
                let gr =
                    SideGradients { theta: g_theta, phi: g_phi, phases: [-ez * k - g_az, -ex * k, -ez * k + g_az] };
                (TripodParams { left, right }, ParamGradients { left: gl, right: gr })
            }
            PresetParams::SpinOrbit { omega, theta, k3, kl, kr } => {
                let side = |phases: [f64; 3]| SideParams { omega, theta, phi: FRAC_PI_4, phases };
                let grads = |phases: [Vec3; 3]| SideGradients { theta: Vec3::zeros(), phi: Vec3::zeros(), phases };
                let left = side([kl.dot(&pos), -kl.dot(&pos), -k3.dot(&pos)]);
                let right = side([kr.dot(&pos), -kr.dot(&pos), k3.dot(&pos)]);
                (
                    TripodParams { left, right },
                    ParamGradients { left: grads([kl, -kl, -k3]), right: grads([kr, -kr, k3]) },
                )
            }
            PresetParams::Tripod { omega_scale, k } => {
                let (rho, z, az) = (p.rho(), p.z, p.azimuth());
                let g_az = grad_azimuth(p);
                let left = SideParams {
                    omega: omega_scale * p.r(),
                    theta: rho.atan2(z),
                    phi: FRAC_PI_4,
                    phases: [k * z + az, k * z - az, k * p.x],
                };
                let gl = SideGradients {
                    theta: grad_atan2(rho, grad_rho(p), z, ez),
                    phi: Vec3::zeros(),
                    phases: [ez * k + g_az, ez * k - g_az, ex * k],
                };
                (
                    TripodParams { left, right: SideParams::decoupled() },
                    ParamGradients { left: gl, right: SideGradients::default() },
                )
            }
        }
    }
}

impl ParamField for PresetParams {
    fn params(&self, p: &Point) -> Result<TripodParams> {
        Ok(self.evaluate(p).0)
    }

    fn gradients(&self, p: &Point) -> Result<ParamGradients> {
        Ok(self.evaluate(p).1)
    }
}

/// One term `f(θ) M` of a reference angular profile.
#[derive(Debug, Clone)]
pub struct ProfileTerm {
    pub name: &'static str,
    pub matrix: CMatrix,
    pub coefficient: fn(f64) -> f64,
}

impl ProfileTerm {
    /// `(f(π) − f(0))/2`.
    pub fn charge(&self) -> f64 {
        ((self.coefficient)(std::f64::consts::PI) - (self.coefficient)(0.0)) / 2.0
    }
}

/// Closed-form connection expected for one dark basis.
#[derive(Debug, Clone)]
pub enum ExpectedConnection {
    /// Monopole term along `generator` plus the plane-wave terms.
    RubidiumMonopole { generator: CMatrix, k: f64, co_propagating: bool },
    /// Constant connection `½k_3 J_z + (2ħ/√(2 + tan²Θ))(k_l g_1 + k_r g_6)`.
    SpinOrbit { k3: Vec3, kl: Vec3, kr: Vec3, theta: f64 },
    /// Only the `ê_φ` profile `g(θ) = Σ f_j(θ) M_j` is available.
    Profile(Vec<ProfileTerm>),
}

impl ExpectedConnection {
    pub fn is_full(&self) -> bool {
        !matches!(self, ExpectedConnection::Profile(_))
    }

    /// Full closed form; `None` for profile-only entries.
    pub fn connection(&self, p: &Point, hbar: f64) -> Option<Connection> {
        match self {
            ExpectedConnection::RubidiumMonopole { generator, k, co_propagating } => {
                let theta = p.theta();
                let (st, ct) = theta.sin_cos();
                let monopole = Connection::from_direction(&p.e_phi(), generator)
                    .map(|m| m * real(-hbar * ct / (p.r() * st)));
                let diag = if *co_propagating {
                    real_matrix(3, &[1.0, 0.0, 0.0, 0.0, ct * ct, 0.0, 0.0, 0.0, 1.0])
                } else {
                    real_matrix(3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0])
                };
                let plane = Connection::from_direction(&(axis(2) - axis(0)), &diag).map(|m| m * real(hbar * k));
                Some(monopole.add(&plane))
            }
            ExpectedConnection::SpinOrbit { k3, kl, kr, theta } => {
                let jz = spin1_operators(hbar).jz;
                let g1 = gellmann_matrix(1).expect("valid").into_matrix();
                let g6 = gellmann_matrix(6).expect("valid").into_matrix();
                let beta = 2.0 * hbar / (2.0 + theta.tan().powi(2)).sqrt();
                Some(Connection::new(std::array::from_fn(|c| {
                    &jz * real(0.5 * k3[c]) + (&g1 * real(kl[c]) + &g6 * real(kr[c])) * real(beta)
                })))
            }
            ExpectedConnection::Profile(_) => None,
        }
    }

    /// Dimensionless profile `g(θ)`; `None` for full forms.
    pub fn profile(&self, theta: f64) -> Option<CMatrix> {
        match self {
            ExpectedConnection::Profile(terms) => {
                let dim = terms[0].matrix.nrows();
                Some(terms.iter().fold(linalg::zeros(dim), |acc, t| acc + &t.matrix * real((t.coefficient)(theta))))
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> &[ProfileTerm] {
        match self {
            ExpectedConnection::Profile(terms) => terms,
            _ => &[],
        }
    }
}

/// One analytic dark basis of a scenario and what it is expected to produce.
#[derive(Debug, Clone)]
pub struct GaugeView {
    pub name: &'static str,
    pub tag: GaugeTag,
    pub expected: Option<ExpectedConnection>,
    /// Dimensionless charge matrix `Q`.
    pub expected_charge: Option<CMatrix>,
    /// Generator the scalar charge is measured along.
    pub reference: Option<CMatrix>,
    /// Whether the closed-form `(D_l, D_0, D_r)` connection applies.
    pub closed_form_connection: bool,
}

/// Position-dependent unitaries bundled with the presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetTransform {
    /// `exp(iθ J̃_y/ħ)` with θ the polar angle.
    StrontiumRotation,
    /// `e^{iS_23}/√(1+cos²θ) [[cosθ, 1], [1, −cosθ]]`.
    TripodBasisChange { k: f64 },
}

impl UnitaryField for PresetTransform {
    fn dim(&self) -> usize {
        match self {
            PresetTransform::StrontiumRotation => 3,
            PresetTransform::TripodBasisChange { .. } => 2,
        }
    }

    fn unitary(&self, p: &Point) -> Result<CMatrix> {
        let theta = p.theta();
        match *self {
            PresetTransform::StrontiumRotation => {
                Ok(linalg::expm_i_hermitian(&spin1_operators(1.0).jy_tilde, theta))
            }
            PresetTransform::TripodBasisChange { k } => {
                let ct = theta.cos();
                let s23 = (k * p.z - p.azimuth()) - k * p.x;
                let m = real_matrix(2, &[ct, 1.0, 1.0, -ct]);
                Ok(m * (cis(s23) / (1.0 + ct * ct).sqrt()))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformView {
    pub unitary: PresetTransform,
    /// Gauge whose connection is transformed.
    pub from: usize,
    /// Gauge the transformed connection should coincide with, if any.
    pub to: Option<usize>,
    pub expected_charge: CMatrix,
    pub reference: CMatrix,
    /// Whether the unitary is smooth through the poles; a rotation by the polar angle is not.
    pub smooth_at_poles: bool,
}

/// A fully specified preset.
#[derive(Clone)]
pub struct Scenario {
    pub id: ScenarioId,
    pub overrides: Overrides,
    pub rabi: Arc<RabiConfiguration>,
    pub params: Arc<PresetParams>,
    pub gauges: Vec<GaugeView>,
    pub transform: Option<TransformView>,
    /// Whether the beams vanish on the z-axis.
    pub singular: bool,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario").field("id", &self.id).field("overrides", &self.overrides).finish_non_exhaustive()
    }
}

fn beams(list: Vec<(Side, usize, BeamSpec)>) -> std::collections::BTreeMap<BeamKey, BeamSpec> {
    list.into_iter().map(|(s, l, b)| (BeamKey::new(s, l), b)).collect()
}

fn sr_mixing_matrix() -> CMatrix {
    real_matrix(3, &[0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, 0.0])
}

fn sr_terms() -> Vec<ProfileTerm> {
    vec![
        ProfileTerm {
            name: "mixing",
            matrix: sr_mixing_matrix(),
            coefficient: |t| {
                let s = t.sin();
                t.cos() * s * s / (1.0 + 2.0 * s * s).sqrt()
            },
        },
        ProfileTerm { name: "Jz", matrix: spin1_operators(1.0).jz, coefficient: |t| 2.0 - t.sin().powi(2) },
    ]
}

fn tripod_shared_terms() -> Vec<ProfileTerm> {
    vec![ProfileTerm { name: "sigma-x", matrix: pauli_x(), coefficient: f64::cos }]
}

fn tripod_outer_terms() -> Vec<ProfileTerm> {
    vec![
        ProfileTerm { name: "identity", matrix: linalg::identity(2), coefficient: |_| 1.0 },
        ProfileTerm {
            name: "sigma-x",
            matrix: pauli_x(),
            coefficient: |t| {
                let c = t.cos();
                c * t.sin().powi(2) / (1.0 + c * c)
            },
        },
        ProfileTerm {
            name: "sigma-z",
            matrix: pauli_z(),
            coefficient: |t| {
                let c = t.cos();
                2.0 * c * c / (1.0 + c * c)
            },
        },
    ]
}

pub fn make_scenario(id: ScenarioId, overrides: &Overrides) -> Result<Scenario> {
    overrides.validate()?;
    let u = overrides.units;
    let (k, big_r, w0) = (u.k, u.beam_scale, u.omega0);
    let omega_scale = w0 / big_r;
    let ops = spin1_operators(1.0);
    let (side_l, side_r) = (Side::Left, Side::Right);
    let scenario = match id {
        ScenarioId::RbMonopoleJx | ScenarioId::RbMonopoleJxTilde => {
            let flipped = id == ScenarioId::RbMonopoleJxTilde;
            let s = overrides.right_k_sign;
            let w: i32 = if flipped { 1 } else { -1 };
            let rabi = RabiConfiguration::new(
                Scheme::Rubidium2Tripod,
                beams(vec![
                    (side_l, 1, BeamSpec::laguerre_gauss(w0, -1, [0.0, 0.0, k], big_r)),
                    (side_l, 2, BeamSpec::laguerre_gauss(w0, 1, [0.0, 0.0, k], big_r)),
                    (side_l, 3, BeamSpec::hermite_gauss(w0, 2, [k, 0.0, 0.0], big_r)),
                    (side_r, 1, BeamSpec::laguerre_gauss(w0, w, [0.0, 0.0, s * k], big_r)),
                    (side_r, 2, BeamSpec::laguerre_gauss(w0, -w, [0.0, 0.0, s * k], big_r)),
                    (side_r, 3, BeamSpec::hermite_gauss(w0, 2, [s * k, 0.0, 0.0], big_r)),
                ]),
            )?;
            let generator = if flipped { ops.jx_tilde.clone() } else { ops.jx.clone() };
            Scenario {
                id,
                overrides: *overrides,
                rabi: Arc::new(rabi),
                params: Arc::new(PresetParams::Rubidium { omega_scale, k, right_k_sign: s, flipped }),
                gauges: vec![GaugeView {
                    name: "two-tripod",
                    tag: GaugeTag::TwoTripod,
                    expected: Some(ExpectedConnection::RubidiumMonopole {
                        generator: generator.clone(),
                        k,
                        co_propagating: s > 0.0,
                    }),
                    expected_charge: Some(generator.clone()),
                    reference: Some(generator),
                    closed_form_connection: true,
                }],
                transform: None,
                singular: true,
            }
        }
        ScenarioId::RbSoCoupling => {
            let so = overrides.spin_orbit;
            let (k3, kl) = if so.k3_along_x { (axis(0) * k, axis(2) * k) } else { (axis(2) * k, axis(0) * k) };
            let kr = kl * so.kr_sign;
            let a = w0 * so.theta.sin() / SQRT_2;
            let b = w0 * so.theta.cos();
            let arr = |v: Vec3| [v[0], v[1], v[2]];
            let rabi = RabiConfiguration::new(
                Scheme::Rubidium2Tripod,
                beams(vec![
                    (side_l, 1, BeamSpec::plane_wave(a, 1.0, arr(kl))),
                    (side_l, 2, BeamSpec::plane_wave(a, 1.0, arr(-kl))),
                    (side_l, 3, BeamSpec::plane_wave(b, 1.0, arr(-k3))),
                    (side_r, 1, BeamSpec::plane_wave(a, 1.0, arr(kr))),
                    (side_r, 2, BeamSpec::plane_wave(a, 1.0, arr(-kr))),
                    (side_r, 3, BeamSpec::plane_wave(b, 1.0, arr(k3))),
                ]),
            )?;
            Scenario {
                id,
                overrides: *overrides,
                rabi: Arc::new(rabi),
                params: Arc::new(PresetParams::SpinOrbit { omega: w0, theta: so.theta, k3, kl, kr }),
                gauges: vec![GaugeView {
                    name: "two-tripod",
                    tag: GaugeTag::TwoTripod,
                    expected: Some(ExpectedConnection::SpinOrbit { k3, kl, kr, theta: so.theta }),
                    expected_charge: None,
                    reference: None,
                    closed_form_connection: true,
                }],
                transform: None,
                singular: false,
            }
        }
        ScenarioId::SrMonopole => {
            let rabi = RabiConfiguration::new(
                Scheme::Strontium2Tripod,
                beams(vec![
                    (side_l, 1, BeamSpec::laguerre_gauss(w0, -1, [0.0, 0.0, k], big_r)),
                    (side_l, 2, BeamSpec::hermite_gauss(w0, 2, [k, 0.0, 0.0], big_r)),
                    (side_l, 3, BeamSpec::laguerre_gauss(w0, 1, [0.0, 0.0, k], big_r)),
                    (side_r, 1, BeamSpec::laguerre_gauss(w0, 1, [0.0, 0.0, -k], big_r)),
                    (side_r, 2, BeamSpec::hermite_gauss(w0, 2, [-k, 0.0, 0.0], big_r)),
                    (side_r, 3, BeamSpec::laguerre_gauss(w0, -1, [0.0, 0.0, -k], big_r)),
                ]),
            )?;
            Scenario {
                id,
                overrides: *overrides,
                rabi: Arc::new(rabi),
                params: Arc::new(PresetParams::Strontium { omega_scale, k }),
                gauges: vec![GaugeView {
                    name: "two-tripod",
                    tag: GaugeTag::TwoTripod,
                    expected: Some(ExpectedConnection::Profile(sr_terms())),
                    expected_charge: Some(linalg::zeros(3)),
                    reference: None,
                    closed_form_connection: true,
                }],
                transform: Some(TransformView {
                    unitary: PresetTransform::StrontiumRotation,
                    from: 0,
                    to: None,
                    expected_charge: &ops.jz * real(-2.0),
                    reference: ops.jz.clone(),
                    smooth_at_poles: false,
                }),
                singular: true,
            }
        }
        ScenarioId::U2Tripod => {
            let rabi = RabiConfiguration::new(
                Scheme::SingleTripod,
                beams(vec![
                    (side_l, 1, BeamSpec::laguerre_gauss(w0 / SQRT_2, 1, [0.0, 0.0, k], big_r)),
                    (side_l, 2, BeamSpec::laguerre_gauss(w0 / SQRT_2, -1, [0.0, 0.0, k], big_r)),
                    (side_l, 3, BeamSpec::hermite_gauss(w0, 2, [k, 0.0, 0.0], big_r)),
                ]),
            )?;
            Scenario {
                id,
                overrides: *overrides,
                rabi: Arc::new(rabi),
                params: Arc::new(PresetParams::Tripod { omega_scale, k }),
                gauges: vec![
                    GaugeView {
                        name: "outer-pair",
                        tag: GaugeTag::TripodOuterPair,
                        expected: Some(ExpectedConnection::Profile(tripod_outer_terms())),
                        expected_charge: Some(linalg::zeros(2)),
                        reference: None,
                        closed_form_connection: false,
                    },
                    GaugeView {
                        name: "shared-pair",
                        tag: GaugeTag::TripodSharedPair,
                        expected: Some(ExpectedConnection::Profile(tripod_shared_terms())),
                        expected_charge: Some(-pauli_x()),
                        reference: Some(pauli_x()),
                        closed_form_connection: true,
                    },
                ],
                transform: Some(TransformView {
                    unitary: PresetTransform::TripodBasisChange { k },
                    from: 0,
                    to: Some(1),
                    expected_charge: -pauli_x(),
                    reference: pauli_x(),
                    smooth_at_poles: true,
                }),
                singular: true,
            }
        }
    };
    Ok(scenario)
}

/// Region sampled by the randomized checks, in units of `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeRegion {
    pub r_min: f64,
    pub r_max: f64,
    /// Largest `|cosθ|`, keeping points away from the z-axis.
    pub max_abs_cos: f64,
}

impl Default for SafeRegion {
    fn default() -> Self {
        Self { r_min: 0.3, r_max: 2.0, max_abs_cos: 0.95 }
    }
}

impl Scenario {
    pub fn scheme(&self) -> Scheme {
        self.id.scheme()
    }

    pub fn hbar(&self) -> f64 {
        self.overrides.units.hbar
    }

    pub fn guard(&self) -> Option<SingularityGuard> {
        self.singular.then(|| self.overrides.numerics.guard(self.overrides.units.beam_scale))
    }

    pub fn connection_step(&self) -> StepRule {
        self.overrides.numerics.connection_rule(self.overrides.units.k, self.singular)
    }

    pub fn curvature_step(&self) -> StepRule {
        self.overrides.numerics.curvature_rule(self.overrides.units.k, self.singular)
    }

    pub fn charge_settings(&self) -> ChargeSettings {
        ChargeSettings { curvature_step: self.curvature_step(), ..ChargeSettings::new(self.overrides.units.k) }
    }

    /// Charge settings for the transformed connection; pole limits fall back to odd fits when
    /// the unitary is not smooth there.
    pub fn transformed_charge_settings(&self) -> ChargeSettings {
        let mut settings = self.charge_settings();
        if let Some(t) = &self.transform {
            settings.profile.even_poles = t.smooth_at_poles;
        }
        settings
    }

    pub fn gauge(&self, index: usize) -> Result<&GaugeView> {
        self.gauges
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no gauge #{}", self.id, index)))
    }

    pub fn analytic_frames(&self, gauge: usize) -> Result<Arc<dyn FrameField>> {
        let view = self.gauge(gauge)?;
        Ok(Arc::new(AnalyticFrames {
            params: self.params.clone(),
            scheme: self.scheme(),
            gauge: view.tag,
            guard: self.guard(),
        }))
    }

    pub fn numeric_frames(&self, gauge: usize) -> Result<Arc<dyn FrameField>> {
        Ok(Arc::new(NumericFrames { rabi: self.rabi.clone(), reference: self.analytic_frames(gauge)? }))
    }

    pub fn numeric_connection(&self, gauge: usize) -> Result<Arc<dyn ConnectionField>> {
        Ok(Arc::new(crate::gauge_fields::NumericConnection {
            frames: self.numeric_frames(gauge)?,
            step: self.connection_step(),
            hbar: self.hbar(),
        }))
    }

    /// Closed-form `(D_l, D_0, D_r)` connection, when it applies to the gauge.
    pub fn closed_form_connection(&self, gauge: usize) -> Result<Option<Arc<dyn ConnectionField>>> {
        let view = self.gauge(gauge)?;
        if !view.closed_form_connection {
            return Ok(None);
        }
        let dim = view.tag.dark_dim().unwrap_or(self.scheme().dark_dim());
        Ok(Some(Arc::new(AnalyticConnection {
            params: self.params.clone(),
            hbar: self.hbar(),
            dim,
            guard: self.guard(),
        })))
    }

    pub fn transformed_connection(&self) -> Result<Option<Arc<dyn ConnectionField>>> {
        let Some(t) = &self.transform else { return Ok(None) };
        Ok(Some(Arc::new(TransformedConnection {
            base: self.numeric_connection(t.from)?,
            unitary: Arc::new(t.unitary),
            step: self.connection_step(),
            hbar: self.hbar(),
        })))
    }

    /// Deterministic points inside `region`, scaled by `R`.
    pub fn safe_points(&self, n: usize, seed: u64, region: &SafeRegion) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.overrides.units.beam_scale;
        (0..n)
            .map(|_| {
                let r = scale * rng.random_range(region.r_min..region.r_max);
                let cos_t: f64 = rng.random_range(-region.max_abs_cos..region.max_abs_cos);
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                Point::from_spherical(r, cos_t.acos(), phi)
            })
            .collect()
    }

    /// Closed-form scalar potential `Φ±` for the co-propagating rubidium monopoles.
    pub fn expected_scalar_potential(&self, p: &Point) -> Option<CMatrix> {
        let flipped = match self.id {
            ScenarioId::RbMonopoleJx => false,
            ScenarioId::RbMonopoleJxTilde => true,
            _ => return None,
        };
        if self.overrides.right_k_sign < 0.0 {
            return None;
        }
        let u = self.overrides.units;
        let (k, r, az) = (u.k, p.r(), p.azimuth());
        let (st, ct) = p.theta().sin_cos();
        let sign = if flipped { -1.0 } else { 1.0 };
        let outer = 1.0 / (2.0 * r * r * st * st) + 1.0 / (2.0 * r * r);
        let middle = 1.0 / (r * r) + 0.5 * k * k * (2.0 * p.theta()).sin().powi(2);
        let corner = -sign * ct * ct / (2.0 * r * r * st * st);
        let mix = -(SQRT_2 * k / (4.0 * r)) * (2.0 * p.theta()).sin() * az.sin();
        let m = real_matrix(
            3,
            &[outer, mix, corner, mix, middle, sign * mix, corner, sign * mix, outer],
        );
        Some(m * real(u.hbar * u.hbar / (2.0 * u.mass)))
    }
}

/// All presets with default settings.
pub fn all_scenarios(overrides: &Overrides) -> Result<Vec<Scenario>> {
    ScenarioId::ALL.iter().map(|&id| make_scenario(id, overrides)).collect()
}
