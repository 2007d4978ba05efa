//! Idealized optical fields and the tripod angle/phase parametrization.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cis, Vec3, C64};

/// Cartesian position in units of the beam scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(r * st * cp, r * st * sp, r * ct)
    }

    pub fn r(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn rho(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Polar angle from +z.
    pub fn theta(&self) -> f64 {
        self.rho().atan2(self.z)
    }

    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn vec(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn offset(&self, axis: usize, h: f64) -> Self {
        let mut v = self.vec();
        v[axis] += h;
        v.into()
    }

    pub fn e_r(&self) -> Vec3 {
        let r = self.r();
        if r == 0.0 {
            Vec3::z()
        } else {
            self.vec() / r
        }
    }

    pub fn e_theta(&self) -> Vec3 {
        let (st, ct) = self.theta().sin_cos();
        let (sp, cp) = self.azimuth().sin_cos();
        Vec3::new(ct * cp, ct * sp, -st)
    }

    pub fn e_phi(&self) -> Vec3 {
        let (sp, cp) = self.azimuth().sin_cos();
        Vec3::new(-sp, cp, 0.0)
    }
}

impl From<Vec3> for Point {
    fn from(v: Vec3) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BeamKind {
    /// Amplitude ∝ ρ/R with a phase winding `e^{i ℓ φ}`.
    LaguerreGaussIdeal { winding: i32 },
    /// First-order mode, amplitude ∝ (coordinate along `nodal_axis`)/R.
    HermiteGaussIdeal { nodal_axis: usize },
    PlaneWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamSpec {
    pub kind: BeamKind,
    pub amplitude: f64,
    pub wavevector: [f64; 3],
    pub scale: f64,
    pub phase_offset: f64,
    pub prefactor: f64,
}

impl BeamSpec {
    pub fn laguerre_gauss(amplitude: f64, winding: i32, wavevector: [f64; 3], scale: f64) -> Self {
        Self {
            kind: BeamKind::LaguerreGaussIdeal { winding },
            amplitude,
            wavevector,
            scale,
            phase_offset: 0.0,
            prefactor: 1.0,
        }
    }

    pub fn hermite_gauss(amplitude: f64, nodal_axis: usize, wavevector: [f64; 3], scale: f64) -> Self {
        Self {
            kind: BeamKind::HermiteGaussIdeal { nodal_axis },
            amplitude,
            wavevector,
            scale,
            phase_offset: 0.0,
            prefactor: 1.0,
        }
    }

    pub fn plane_wave(amplitude: f64, prefactor: f64, wavevector: [f64; 3]) -> Self {
        Self { kind: BeamKind::PlaneWave, amplitude, wavevector, scale: 1.0, phase_offset: 0.0, prefactor }
    }

    pub fn sample(&self, p: &Point) -> C64 {
        let k = Vec3::from(self.wavevector);
        let mut phase = k.dot(&p.vec()) + self.phase_offset;
        let envelope = match self.kind {
            BeamKind::LaguerreGaussIdeal { winding } => {
                phase += winding as f64 * p.azimuth();
                p.rho() / self.scale
            }
            BeamKind::HermiteGaussIdeal { nodal_axis } => p.vec()[nodal_axis] / self.scale,
            BeamKind::PlaneWave => 1.0,
        };
        cis(phase) * (self.amplitude * self.prefactor * envelope)
    }
}

/// Level scheme driven by the beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rubidium2Tripod,
    Strontium2Tripod,
    SingleTripod,
    Lambda,
}

/// One driven transition of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub side: Side,
    /// Label of the beam (1..=3) as it appears in the Rabi set.
    pub label: usize,
    /// Row of the excited state in the full Hamiltonian (0-based).
    pub excited: usize,
    /// Row of the ground state (0-based).
    pub ground: usize,
    /// Slot in the tripod parametrization (0-based; slot 2 couples the shared state).
    pub slot: usize,
}

const fn tr(side: Side, label: usize, excited: usize, ground: usize, slot: usize) -> Transition {
    Transition { side, label, excited, ground, slot }
}

const RUBIDIUM: [Transition; 6] = [
    tr(Side::Left, 1, 5, 0, 0),
    tr(Side::Left, 2, 5, 1, 1),
    tr(Side::Left, 3, 5, 2, 2),
    tr(Side::Right, 3, 6, 2, 2),
    tr(Side::Right, 2, 6, 3, 1),
    tr(Side::Right, 1, 6, 4, 0),
];

// The beam labelled 1 drives the shared level on both sides.
const STRONTIUM: [Transition; 6] = [
    tr(Side::Left, 1, 5, 2, 2),
    tr(Side::Left, 2, 5, 1, 1),
    tr(Side::Left, 3, 5, 0, 0),
    tr(Side::Right, 1, 6, 2, 2),
    tr(Side::Right, 2, 6, 3, 1),
    tr(Side::Right, 3, 6, 4, 0),
];

const SINGLE_TRIPOD: [Transition; 3] = [
    tr(Side::Left, 1, 3, 0, 0),
    tr(Side::Left, 2, 3, 1, 1),
    tr(Side::Left, 3, 3, 2, 2),
];

const LAMBDA: [Transition; 2] = [tr(Side::Left, 1, 2, 0, 0), tr(Side::Left, 2, 2, 1, 1)];

impl Scheme {
    pub fn transitions(self) -> &'static [Transition] {
        match self {
            Scheme::Rubidium2Tripod => &RUBIDIUM,
            Scheme::Strontium2Tripod => &STRONTIUM,
            Scheme::SingleTripod => &SINGLE_TRIPOD,
            Scheme::Lambda => &LAMBDA,
        }
    }

    pub fn n_ground(self) -> usize {
        match self {
            Scheme::Rubidium2Tripod | Scheme::Strontium2Tripod => 5,
            Scheme::SingleTripod => 3,
            Scheme::Lambda => 2,
        }
    }

    pub fn n_excited(self) -> usize {
        match self {
            Scheme::Rubidium2Tripod | Scheme::Strontium2Tripod => 2,
            Scheme::SingleTripod | Scheme::Lambda => 1,
        }
    }

    pub fn n_levels(self) -> usize {
        self.n_ground() + self.n_excited()
    }

    pub fn dark_dim(self) -> usize {
        self.n_ground() - self.n_excited()
    }

    pub fn is_two_tripod(self) -> bool {
        matches!(self, Scheme::Rubidium2Tripod | Scheme::Strontium2Tripod)
    }

    pub fn keys(self) -> Vec<BeamKey> {
        self.transitions().iter().map(|t| BeamKey::new(t.side, t.label)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BeamKey {
    pub side: Side,
    pub label: usize,
}

impl BeamKey {
    pub const fn new(side: Side, label: usize) -> Self {
        Self { side, label }
    }
}

impl fmt::Display for BeamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Left => 'l',
            Side::Right => 'r',
        };
        write!(f, "{}{}", s, self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiConfiguration {
    scheme: Scheme,
    beams: BTreeMap<BeamKey, BeamSpec>,
}

impl RabiConfiguration {
    pub fn new(scheme: Scheme, beams: BTreeMap<BeamKey, BeamSpec>) -> Result<Self> {
        let mut expected = scheme.keys();
        expected.sort();
        let found: Vec<BeamKey> = beams.keys().copied().collect();
        if expected != found {
            return Err(Error::InvalidParameter(format!(
                "scheme {:?} needs {} beams, got {}",
                scheme,
                expected.len(),
                found.len()
            )));
        }
        Ok(Self { scheme, beams })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn beams(&self) -> &BTreeMap<BeamKey, BeamSpec> {
        &self.beams
    }

    pub fn beam(&self, side: Side, label: usize) -> Option<&BeamSpec> {
        self.beams.get(&BeamKey::new(side, label))
    }
}

/// Complex Rabi frequencies at one point, addressed by beam label.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RabiValues {
    pub values: [[C64; 3]; 2],
}

impl RabiValues {
    pub fn get(&self, side: Side, label: usize) -> C64 {
        self.values[side.index()][label - 1]
    }

    pub fn set(&mut self, side: Side, label: usize, value: C64) {
        self.values[side.index()][label - 1] = value;
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.values.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }
}

pub fn evaluate_rabi(config: &RabiConfiguration, p: &Point) -> RabiValues {
    let mut out = RabiValues::default();
    for (key, beam) in &config.beams {
        out.set(key.side, key.label, beam.sample(p));
    }
    out
}

/// Amplitudes in tripod slot order: slot 2 couples the shared level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TripodAmplitudes {
    pub left: [C64; 3],
    pub right: [C64; 3],
}

impl TripodAmplitudes {
    pub fn from_rabi(values: &RabiValues, scheme: Scheme) -> Self {
        let mut out = Self::default();
        for t in scheme.transitions() {
            let v = values.get(t.side, t.label);
            match t.side {
                Side::Left => out.left[t.slot] = v,
                Side::Right => out.right[t.slot] = v,
            }
        }
        out
    }
}

/// Angles and phases of one tripod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideParams {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub phases: [f64; 3],
}

impl SideParams {
    /// A tripod whose shared-level coupling is absent (θ = π/2) and which
    /// carries no position dependence.
    pub fn decoupled() -> Self {
        Self { omega: 0.0, theta: std::f64::consts::FRAC_PI_2, phi: 0.0, phases: [0.0; 3] }
    }

    pub fn amplitudes(&self) -> [C64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [
            cis(self.phases[0]) * (self.omega * st * cp),
            cis(self.phases[1]) * (self.omega * st * sp),
            cis(self.phases[2]) * (self.omega * ct),
        ]
    }

    /// `S_i - S_j` for 1-based labels.
    pub fn phase_diff(&self, i: usize, j: usize) -> f64 {
        self.phases[i - 1] - self.phases[j - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripodParams {
    pub left: SideParams,
    pub right: SideParams,
}

impl TripodParams {
    pub fn side(&self, side: Side) -> &SideParams {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn amplitudes(&self) -> TripodAmplitudes {
        TripodAmplitudes { left: self.left.amplitudes(), right: self.right.amplitudes() }
    }
}

pub fn parametrize_side(amps: &[C64; 3], side: Side) -> Result<SideParams> {
    let omega = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if omega == 0.0 {
        return Err(Error::DegenerateCoupling(side));
    }
    let theta = (amps[2].norm() / omega).clamp(0.0, 1.0).acos();
    // atan2(0, 0) = 0 gives the tie-break at θ = 0.
    let phi = amps[1].norm().atan2(amps[0].norm());
    let phases = [amps[0].arg(), amps[1].arg(), amps[2].arg()];
    Ok(SideParams { omega, theta, phi, phases })
}

/// Canonical parametrization (θ, φ ∈ [0, π/2], signs carried by the phases).
pub fn parametrize_rabi(values: &RabiValues, scheme: Scheme) -> Result<TripodParams> {
    let amps = TripodAmplitudes::from_rabi(values, scheme);
    let left = parametrize_side(&amps.left, Side::Left)?;
    let right = if scheme.is_two_tripod() {
        parametrize_side(&amps.right, Side::Right)?
    } else {
        SideParams::decoupled()
    };
    Ok(TripodParams { left, right })
}

/// Anything that yields Rabi frequencies at a point.
pub trait RabiField: Send + Sync {
    fn scheme(&self) -> Scheme;
    fn rabi(&self, p: &Point) -> RabiValues;
}

impl RabiField for RabiConfiguration {
    fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn rabi(&self, p: &Point) -> RabiValues {
        evaluate_rabi(self, p)
    }
}

impl<T: RabiField + ?Sized> RabiField for std::sync::Arc<T> {
    fn scheme(&self) -> Scheme {
        self.as_ref().scheme()
    }

    fn rabi(&self, p: &Point) -> RabiValues {
        self.as_ref().rabi(p)
    }
}

/// Refuses points close to the z-axis or the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityGuard {
    pub axis: f64,
    pub origin: f64,
}

impl SingularityGuard {
    pub fn check(&self, p: &Point) -> Result<()> {
        let what = if p.r() <= self.origin {
            "origin"
        } else if p.rho() <= self.axis {
            "z-axis"
        } else {
            return Ok(());
        };
        Err(Error::NearSingularity { x: p.x, y: p.y, z: p.z, what })
    }
}

/// Central-difference step `factor · min(r, 1/k)`.
///
/// Fields that wind around the z-axis vary on the scale of `ρ`; with
/// `axis_aware` the step also shrinks with `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub factor: f64,
    pub k: f64,
    pub axis_aware: bool,
}

impl StepRule {
    pub fn new(factor: f64, k: f64) -> Self {
        Self { factor, k, axis_aware: false }
    }

    pub fn length_scale(&self, p: &Point) -> f64 {
        let r = if self.axis_aware { p.rho() } else { p.r() };
        let inv_k = if self.k > 0.0 { 1.0 / self.k } else { f64::INFINITY };
        let l = r.min(inv_k);
        if l.is_finite() && l > 0.0 {
            l
        } else {
            1.0
        }
    }

    pub fn step(&self, p: &Point) -> f64 {
        self.factor * self.length_scale(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SideGradients {
    pub theta: Vec3,
    pub phi: Vec3,
    pub phases: [Vec3; 3],
}

impl SideGradients {
    /// `∇(S_i - S_j)` for 1-based labels.
    pub fn phase_diff(&self, i: usize, j: usize) -> Vec3 {
        self.phases[i - 1] - self.phases[j - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamGradients {
    pub left: SideGradients,
    pub right: SideGradients,
}

/// A position-dependent tripod parametrization.
pub trait ParamField: Send + Sync {
    fn params(&self, p: &Point) -> Result<TripodParams>;

    /// Defaults to central differences with a step of `1e-6 · max(r, 1)`.
    fn gradients(&self, p: &Point) -> Result<ParamGradients> {
        finite_difference_gradients(self, p, 1e-6 * p.r().max(1.0))
    }
}

fn wrap_phase(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    (a + PI).rem_euclid(TAU) - PI
}

/// Central differences of a parameter field; phase steps are unwrapped.
pub fn finite_difference_gradients<F: ParamField + ?Sized>(
    field: &F,
    p: &Point,
    h: f64,
) -> Result<ParamGradients> {
    let mut out = ParamGradients::default();
    for axis in 0..3 {
        let plus = field.params(&p.offset(axis, h))?;
        let minus = field.params(&p.offset(axis, -h))?;
        for (side, g) in [(Side::Left, &mut out.left), (Side::Right, &mut out.right)] {
            let (a, b) = (plus.side(side), minus.side(side));
            g.theta[axis] = (a.theta - b.theta) / (2.0 * h);
            g.phi[axis] = (a.phi - b.phi) / (2.0 * h);
            for i in 0..3 {
                g.phases[i][axis] = wrap_phase(a.phases[i] - b.phases[i]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

/// Canonical parametrization of a Rabi field, with finite-difference gradients.
pub struct RabiParamField<R: RabiField> {
    pub rabi: R,
    pub step: StepRule,
}

impl<R: RabiField> ParamField for RabiParamField<R> {
    fn params(&self, p: &Point) -> Result<TripodParams> {
        parametrize_rabi(&self.rabi.rabi(p), self.rabi.scheme())
    }

    fn gradients(&self, p: &Point) -> Result<ParamGradients> {
        finite_difference_gradients(self, p, self.step.step(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn spherical_helpers() {
        let p = Point::new(1.0, 1.0, 2f64.sqrt());
        assert!((p.r() - 2.0).abs() < 1e-15);
        assert!((p.theta() - FRAC_PI_4).abs() < 1e-15);
        assert!((p.azimuth() - FRAC_PI_4).abs() < 1e-15);
        let q = Point::from_spherical(2.0, FRAC_PI_4, FRAC_PI_4);
        assert!((q.vec() - p.vec()).norm() < 1e-15);
        assert!(p.e_r().dot(&p.e_phi()).abs() < 1e-15);
        assert!(p.e_theta().dot(&p.e_phi()).abs() < 1e-15);
        assert!((p.e_r().cross(&p.e_theta()) - p.e_phi()).norm() < 1e-15);
    }

    #[test]
    fn beam_profiles() {
        let lg = BeamSpec::laguerre_gauss(1.0, 1, [0.0, 0.0, 1.0], 1.0);
        assert_eq!(lg.sample(&Point::new(0.0, 0.0, 0.3)).norm(), 0.0);
        let hg = BeamSpec::hermite_gauss(1.0, 2, [1.0, 0.0, 0.0], 1.0);
        assert_eq!(hg.sample(&Point::new(0.4, -0.2, 0.0)).norm(), 0.0);
        let lg_minus = BeamSpec::laguerre_gauss(1.0, -1, [0.0, 0.0, 1.0], 1.0);
        let p = Point::new(0.3, -0.8, 0.5);
        let (a, b) = (lg.sample(&p), lg_minus.sample(&p));
        assert!((a.norm() - b.norm()).abs() < 1e-15);
        assert!(((a / b).arg() - 2.0 * p.azimuth()).abs() < 1e-12);
    }

    #[test]
    fn parametrize_examples() {
        let s = parametrize_side(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], Side::Left).unwrap();
        assert!((s.theta - FRAC_PI_2).abs() < 1e-15);
        assert!((s.phi - FRAC_PI_4).abs() < 1e-15);
        assert!((s.omega - 2f64.sqrt()).abs() < 1e-15);
        let s = parametrize_side(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], Side::Left).unwrap();
        assert_eq!((s.theta, s.phi, s.phases[2]), (0.0, 0.0, 0.0));
        assert_eq!(
            parametrize_side(&[C64::default(); 3], Side::Left),
            Err(Error::DegenerateCoupling(Side::Left))
        );
    }

    #[test]
    fn configuration_key_check() {
        let mut beams = BTreeMap::new();
        beams.insert(BeamKey::new(Side::Left, 1), BeamSpec::plane_wave(1.0, 1.0, [0.0; 3]));
        assert!(RabiConfiguration::new(Scheme::Lambda, beams.clone()).is_err());
        beams.insert(BeamKey::new(Side::Left, 2), BeamSpec::plane_wave(1.0, 1.0, [0.0; 3]));
        assert!(RabiConfiguration::new(Scheme::Lambda, beams).is_ok());
    }
}
