//! Vector potential, scalar potential and curvature of the dark subspace.

use std::sync::Arc;

use serde::Serialize;

use crate::beams::{ParamField, ParamGradients, Point, SideGradients, SideParams, SingularityGuard, StepRule, TripodParams};
use crate::dark_states::{FrameField, MixingWeights};
use crate::error::{Error, Result};
use crate::linalg::{self, commutator, hermitize, real, CMatrix, Vec3, C64, I};

/// Unitarity tolerance for gauge transformations.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Three Cartesian matrix components; used for connections and magnetic fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixVector {
    pub components: [CMatrix; 3],
}

pub type Connection = MatrixVector;
pub type MagneticField = MatrixVector;

impl MatrixVector {
    pub fn new(components: [CMatrix; 3]) -> Self {
        Self { components }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(std::array::from_fn(|_| linalg::zeros(dim)))
    }

    /// `Σ_c v_c M_c`, a constant matrix times a fixed vector field.
    pub fn from_direction(direction: &Vec3, m: &CMatrix) -> Self {
        Self::new(std::array::from_fn(|c| m * real(direction[c])))
    }

    pub fn dim(&self) -> usize {
        self.components[0].nrows()
    }

    /// Projection on a direction, `Σ_c v_c M_c`.
    pub fn along(&self, v: &Vec3) -> CMatrix {
        linalg::contract(v, &self.components)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(other.components.iter())
            .fold(0.0, |acc, (a, b)| acc.max(linalg::max_abs_diff(a, b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |acc, m| acc.max(linalg::max_abs(m)))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.components.iter().fold(0.0, |acc, m| acc.max(linalg::hermiticity_residual(m)))
    }

    /// Top-left `d × d` block of every component.
    pub fn block(&self, d: usize) -> Self {
        Self::new(std::array::from_fn(|c| self.components[c].view((0, 0), (d, d)).into_owned()))
    }

    /// `U M_c U†` for every component.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self::new(std::array::from_fn(|c| u * &self.components[c] * u.adjoint()))
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self::new(std::array::from_fn(|c| f(&self.components[c])))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(std::array::from_fn(|c| &self.components[c] + &other.components[c]))
    }
}

/// A numerically obtained field together with its discarded anti-Hermitian part.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitized<T> {
    pub value: T,
    pub residual: f64,
}

pub trait ConnectionField: Send + Sync {
    fn dim(&self) -> usize;
    fn connection(&self, p: &Point) -> Result<Connection>;
    fn guard(&self) -> Option<SingularityGuard> {
        None
    }
}

pub trait UnitaryField: Send + Sync {
    fn dim(&self) -> usize;
    fn unitary(&self, p: &Point) -> Result<CMatrix>;
}

impl<T: UnitaryField + ?Sized> UnitaryField for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        self.as_ref().dim()
    }

    fn unitary(&self, p: &Point) -> Result<CMatrix> {
        self.as_ref().unitary(p)
    }
}

pub trait CurvatureField: Send + Sync {
    fn dim(&self) -> usize;
    fn magnetic(&self, p: &Point) -> Result<MagneticField>;
}

/// Adapts a closure into a connection field.
pub struct ConnectionFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> ConnectionField for ConnectionFn<F>
where
    F: Fn(&Point) -> Result<Connection> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn connection(&self, p: &Point) -> Result<Connection> {
        (self.f)(p)
    }
}

pub struct UnitaryFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> UnitaryField for UnitaryFn<F>
where
    F: Fn(&Point) -> Result<CMatrix> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn unitary(&self, p: &Point) -> Result<CMatrix> {
        (self.f)(p)
    }
}

pub struct CurvatureFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> CurvatureField for CurvatureFn<F>
where
    F: Fn(&Point) -> Result<MagneticField> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn magnetic(&self, p: &Point) -> Result<MagneticField> {
        (self.f)(p)
    }
}

fn check_guard(guard: Option<SingularityGuard>, p: &Point) -> Result<()> {
    guard.map_or(Ok(()), |g| g.check(p))
}

/// `A_nm = iħ⟨D_n|∂D_m⟩` by central differences of the frame field.
pub fn connection_numeric(frames: &dyn FrameField, p: &Point, h: f64, hbar: f64) -> Result<Hermitized<Connection>> {
    check_guard(frames.guard(), p)?;
    let d0 = frames.frame(p)?;
    let bra = d0.adjoint();
    let mut residual: f64 = 0.0;
    let mut comps: [CMatrix; 3] = std::array::from_fn(|_| linalg::zeros(d0.ncols()));
    for (c, comp) in comps.iter_mut().enumerate() {
        let diff = frames.frame(&p.offset(c, h))? - frames.frame(&p.offset(c, -h))?;
        let raw = &bra * diff * (I * (hbar / (2.0 * h)));
        let (herm, res) = hermitize(&raw);
        residual = residual.max(res);
        *comp = herm;
    }
    Ok(Hermitized { value: Connection::new(comps), residual })
}

/// Shorthand combinations of the gradients of one tripod.
struct SideTerms {
    /// `cos²φ ∇S_23 + sin²φ ∇S_13`
    uncoupled: Vec3,
    /// `cos²φ ∇S_13 + sin²φ ∇S_23`
    coupled: Vec3,
    /// `½ sin2φ ∇S_12` (real part) and `∇φ`
    mix_re: Vec3,
    grad_phi: Vec3,
}

impl SideTerms {
    fn new(side: &SideParams, g: &SideGradients) -> Self {
        let (sp, cp) = side.phi.sin_cos();
        let (s2, c2) = (sp * sp, cp * cp);
        Self {
            uncoupled: g.phase_diff(2, 3) * c2 + g.phase_diff(1, 3) * s2,
            coupled: g.phase_diff(1, 3) * c2 + g.phase_diff(2, 3) * s2,
            mix_re: g.phase_diff(1, 2) * (0.5 * (2.0 * side.phi).sin()),
            grad_phi: g.phi,
        }
    }

    /// Component `c` of `½ sin2φ ∇S_12 + s·i∇φ`.
    fn mix(&self, c: usize, s: f64) -> C64 {
        C64::new(self.mix_re[c], s * self.grad_phi[c])
    }
}

/// The 3×3 two-tripod connection in the `(D_l, D_0, D_r)` basis from angles and gradients.
pub fn connection_eq4(params: &TripodParams, grads: &ParamGradients, hbar: f64) -> Result<Connection> {
    let w = MixingWeights::new(params)?;
    let l = SideTerms::new(&params.left, &grads.left);
    let r = SideTerms::new(&params.right, &grads.right);
    let comps = std::array::from_fn(|c| {
        let mut m = linalg::zeros(3);
        m[(0, 0)] = real(hbar * l.uncoupled[c]);
        m[(2, 2)] = real(hbar * r.uncoupled[c]);
        m[(1, 1)] = real(hbar * (w.left * w.left * l.coupled[c] + w.right * w.right * r.coupled[c]));
        let a21 = l.mix(c, 1.0) * (hbar * w.left);
        let a23 = r.mix(c, 1.0) * (hbar * w.right);
        m[(1, 0)] = a21;
        m[(0, 1)] = a21.conj();
        m[(1, 2)] = a23;
        m[(2, 1)] = a23.conj();
        m
    });
    Ok(Connection::new(comps))
}

/// Closed-form connection of a parameter field, truncated to `dim`.
pub struct AnalyticConnection {
    pub params: Arc<dyn ParamField>,
    pub hbar: f64,
    pub dim: usize,
    pub guard: Option<SingularityGuard>,
}

impl ConnectionField for AnalyticConnection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn connection(&self, p: &Point) -> Result<Connection> {
        check_guard(self.guard, p)?;
        let params = self.params.params(p)?;
        let grads = self.params.gradients(p)?;
        Ok(connection_eq4(&params, &grads, self.hbar)?.block(self.dim))
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.guard
    }
}

/// Finite-difference connection of a frame field.
pub struct NumericConnection {
    pub frames: Arc<dyn FrameField>,
    pub step: StepRule,
    pub hbar: f64,
}

impl ConnectionField for NumericConnection {
    fn dim(&self) -> usize {
        self.frames.dim()
    }

    fn connection(&self, p: &Point) -> Result<Connection> {
        Ok(connection_numeric(self.frames.as_ref(), p, self.step.step(p), self.hbar)?.value)
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.frames.guard()
    }
}

/// `Φ = (ħ²/2m) Σ_c [∂D†∂D − (∂D†D)(D†∂D)]` by central differences.
pub fn scalar_potential_numeric(
    frames: &dyn FrameField,
    p: &Point,
    h: f64,
    hbar: f64,
    mass: f64,
) -> Result<Hermitized<CMatrix>> {
    check_guard(frames.guard(), p)?;
    let d0 = frames.frame(p)?;
    let bra = d0.adjoint();
    let mut sum = linalg::zeros(d0.ncols());
    for c in 0..3 {
        let dd = (frames.frame(&p.offset(c, h))? - frames.frame(&p.offset(c, -h))?) * real(1.0 / (2.0 * h));
        let inner = &bra * &dd;
        sum += dd.adjoint() * &dd - inner.adjoint() * inner;
    }
    let (phi, residual) = hermitize(&(sum * real(hbar * hbar / (2.0 * mass))));
    Ok(Hermitized { value: phi, residual })
}

/// Reading of the two off-diagonal closed-form entries that couple the shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarCoefficients {
    /// Every coefficient taken literally.
    Literal,
    /// `Φ_12` with `(1 + cot²θ_r)` and `Φ_32` with the `α³` denominator.
    Corrected,
}

fn dot(a: &[C64; 3], b: &[C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cvec(v: &Vec3) -> [C64; 3] {
    [real(v[0]), real(v[1]), real(v[2])]
}

/// Closed-form scalar potential in the `(D_l, D_0, D_r)` basis, including the `ħ²/2m` prefactor.
pub fn scalar_potential_closed_form(
    params: &TripodParams,
    grads: &ParamGradients,
    hbar: f64,
    mass: f64,
    variant: ScalarCoefficients,
) -> Result<CMatrix> {
    let w = MixingWeights::new(params)?;
    let [gw_l, gw_r, gw_0] = w.gradients(&grads.left.theta, &grads.right.theta);
    let l = SideTerms::new(&params.left, &grads.left);
    let r = SideTerms::new(&params.right, &grads.right);
    let y_l: [C64; 3] = std::array::from_fn(|c| l.mix(c, -1.0));
    let y_r: [C64; 3] = std::array::from_fn(|c| r.mix(c, -1.0));
    let y_r_conj: [C64; 3] = std::array::from_fn(|c| y_r[c].conj());
    let (x_l, x_r) = (cvec(&l.coupled), cvec(&r.coupled));
    let (wl, wr) = (w.left, w.right);

    let p_l = dot(&y_l, &y_l.map(|z| z.conj())).re;
    let p_r = dot(&y_r, &y_r_conj).re;
    let phi11 = (1.0 - wl * wl) * p_l;
    let phi33 = (1.0 - wr * wr) * p_r;
    let phi22 = wl * wl * (1.0 - wl * wl) * l.coupled.norm_squared()
        + wr * wr * (1.0 - wr * wr) * r.coupled.norm_squared()
        - 2.0 * wl * wl * wr * wr * l.coupled.dot(&r.coupled)
        + gw_l.norm_squared()
        + gw_r.norm_squared()
        + gw_0.norm_squared();
    let phi13 = -dot(&y_l, &y_r_conj) * (wl * wr);

    let left_factor = match variant {
        ScalarCoefficients::Corrected => 1.0 - wl * wl,
        ScalarCoefficients::Literal => 1.0 - wr * wr,
    };
    let phi12 = I * dot(&cvec(&gw_l), &y_l) + dot(&y_l, &x_l) * (wl * left_factor) - dot(&y_l, &x_r) * (wl * wr * wr);

    let cross = match variant {
        ScalarCoefficients::Corrected => wr * wl * wl,
        ScalarCoefficients::Literal => {
            let (sl, cl) = params.left.theta.sin_cos();
            let (sr, cr) = params.right.theta.sin_cos();
            cr * sr * sr * cl * cl / (sl * sl * (sr * sr + 2.0 * cr * cr).powf(1.5))
        }
    };
    let phi32 = I * dot(&cvec(&gw_r), &y_r) + dot(&y_r, &x_r) * (wr * (1.0 - wr * wr)) - dot(&y_r, &x_l) * cross;

    let mut m = linalg::zeros(3);
    m[(0, 0)] = real(phi11);
    m[(1, 1)] = real(phi22);
    m[(2, 2)] = real(phi33);
    m[(0, 1)] = phi12;
    m[(1, 0)] = phi12.conj();
    m[(2, 1)] = phi32;
    m[(1, 2)] = phi32.conj();
    m[(0, 2)] = phi13;
    m[(2, 0)] = phi13.conj();
    Ok(m * real(hbar * hbar / (2.0 * mass)))
}

/// `B_i = ε_ijk (∂_j A_k + A_j A_k / (iħ))` by central differences of the connection.
pub fn magnetic_field(a: &dyn ConnectionField, p: &Point, h: f64, hbar: f64) -> Result<Hermitized<MagneticField>> {
    check_guard(a.guard(), p)?;
    let a0 = a.connection(p)?;
    // derivative[j] = ∂_j A (all components)
    let mut derivative = Vec::with_capacity(3);
    for j in 0..3 {
        let plus = a.connection(&p.offset(j, h))?;
        let minus = a.connection(&p.offset(j, -h))?;
        derivative.push(plus.add(&minus.map(|m| -m)).map(|m| m * real(1.0 / (2.0 * h))));
    }
    let mut residual: f64 = 0.0;
    let comps = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let curl = &derivative[j].components[k] - &derivative[k].components[j];
        let quad = commutator(&a0.components[j], &a0.components[k]) * (-I / hbar);
        let (b, res) = hermitize(&(curl + quad));
        residual = residual.max(res);
        b
    });
    Ok(Hermitized { value: MagneticField::new(comps), residual })
}

/// `A' = U A U† + iħ U ∇U†` with `∇U†` by central differences.
pub fn gauge_transform(
    a: &dyn ConnectionField,
    u: &dyn UnitaryField,
    p: &Point,
    h: f64,
    hbar: f64,
) -> Result<Connection> {
    let u0 = checked_unitary(u, p)?;
    let a0 = a.connection(p)?;
    let comps = std::array::from_fn(|c| -> Result<CMatrix> {
        let du_dag = (u.unitary(&p.offset(c, h))? - u.unitary(&p.offset(c, -h))?).adjoint() * real(1.0 / (2.0 * h));
        Ok(&u0 * &a0.components[c] * u0.adjoint() + &u0 * du_dag * (I * hbar))
    });
    let [x, y, z] = comps;
    Ok(Connection::new([x?, y?, z?]))
}

pub fn checked_unitary(u: &dyn UnitaryField, p: &Point) -> Result<CMatrix> {
    let m = u.unitary(p)?;
    let residual = linalg::unitarity_residual(&m);
    if residual > UNITARY_TOLERANCE {
        return Err(Error::NonUnitary { residual });
    }
    Ok(m)
}

/// Connection seen through a position-dependent change of dark basis.
pub struct TransformedConnection {
    pub base: Arc<dyn ConnectionField>,
    pub unitary: Arc<dyn UnitaryField>,
    pub step: StepRule,
    pub hbar: f64,
}

impl ConnectionField for TransformedConnection {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn connection(&self, p: &Point) -> Result<Connection> {
        gauge_transform(self.base.as_ref(), self.unitary.as_ref(), p, self.step.step(p), self.hbar)
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.base.guard()
    }
}

/// Curvature of a connection field by nested central differences.
pub struct NumericCurvature {
    pub connection: Arc<dyn ConnectionField>,
    pub step: StepRule,
    pub hbar: f64,
}

impl CurvatureField for NumericCurvature {
    fn dim(&self) -> usize {
        self.connection.dim()
    }

    fn magnetic(&self, p: &Point) -> Result<MagneticField> {
        Ok(magnetic_field(self.connection.as_ref(), p, self.step.step(p), self.hbar)?.value)
    }
}

/// Terms of `(p − A)²/2m` beyond `p²/2m` for a constant connection.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalCoupling {
    /// Matrix multiplying `p_c`, i.e. `−A_c/m`.
    pub momentum: [CMatrix; 3],
    /// `A·A/(2m)`.
    pub quadratic: CMatrix,
    /// `ħk/(2m)`.
    pub scale: f64,
    /// `v_c = 2A_c/(ħk)`, so that the momentum terms read `−(ħk/2m) Σ_c v_c p_c`.
    pub v_so: [CMatrix; 3],
}

pub fn minimal_coupling_terms(a: &Connection, hbar: f64, mass: f64, k: f64) -> MinimalCoupling {
    let momentum = std::array::from_fn(|c| a.components[c].clone() * real(-1.0 / mass));
    let quadratic = a.components.iter().fold(linalg::zeros(a.dim()), |acc, m| acc + m * m) * real(0.5 / mass);
    let v_so = std::array::from_fn(|c| a.components[c].clone() * real(2.0 / (hbar * k)));
    MinimalCoupling { momentum, quadratic, scale: hbar * k / (2.0 * mass), v_so }
}

/// Radial component `B·ê_r`.
pub fn radial(b: &MagneticField, p: &Point) -> CMatrix {
    b.along(&p.e_r())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn side(theta: f64, phi: f64) -> SideParams {
        SideParams { omega: 1.0, theta, phi, phases: [0.3, -0.2, 0.9] }
    }

    #[test]
    fn eq4_entry_31_is_zero() {
        let params = TripodParams { left: side(0.4, 0.3), right: side(1.2, 0.8) };
        let mut g = ParamGradients::default();
        g.left.phases = [Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 0.0), Vec3::new(0.2, 0.1, -0.3)];
        g.right.phi = Vec3::new(0.3, 0.3, 0.3);
        g.left.theta = Vec3::new(0.1, 0.0, 0.2);
        let a = connection_eq4(&params, &g, 1.0).unwrap();
        for m in &a.components {
            assert_eq!(m[(2, 0)], C64::new(0.0, 0.0));
            assert_eq!(m[(0, 2)], C64::new(0.0, 0.0));
        }
        assert!(a.hermiticity_residual() < 1e-16);
    }

    #[test]
    fn eq4_a21_vanishes_without_left_phase_or_phi_gradient() {
        let params = TripodParams { left: side(0.4, 0.3), right: side(1.2, 0.8) };
        let mut g = ParamGradients::default();
        g.left.phases = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 0.0)];
        let a = connection_eq4(&params, &g, 1.0).unwrap();
        assert!(a.components.iter().all(|m| m[(1, 0)].norm() == 0.0));
    }

    #[test]
    fn zero_gradients_give_zero_fields() {
        let params = TripodParams { left: side(0.4, 0.3), right: side(FRAC_PI_2, 0.8) };
        let g = ParamGradients::default();
        assert_eq!(connection_eq4(&params, &g, 1.0).unwrap().max_abs(), 0.0);
        for v in [ScalarCoefficients::Literal, ScalarCoefficients::Corrected] {
            assert_eq!(linalg::max_abs(&scalar_potential_closed_form(&params, &g, 1.0, 1.0, v).unwrap()), 0.0);
        }
    }

    #[test]
    fn mirrored_sides_give_equal_outer_entries() {
        let params = TripodParams { left: side(0.7, 0.3), right: side(0.7, 0.3) };
        let mut g = ParamGradients::default();
        g.left.phases = [Vec3::new(1.0, 0.0, 0.5), Vec3::new(-1.0, 0.2, 0.0), Vec3::new(0.0, 0.0, 1.0)];
        g.left.phi = Vec3::new(0.0, 0.4, 0.1);
        g.right = g.left;
        let phi = scalar_potential_closed_form(&params, &g, 1.0, 1.0, ScalarCoefficients::Corrected).unwrap();
        assert!((phi[(0, 0)] - phi[(2, 2)]).norm() < 1e-15);
    }

    #[test]
    fn constant_commuting_connection_has_no_curvature() {
        let a = ConnectionFn { dim: 1, f: |_: &Point| Ok(Connection::new(std::array::from_fn(|c| linalg::identity(1) * real(c as f64)))) };
        let b = magnetic_field(&a, &Point::new(0.3, 0.2, 0.1), 1e-4, 1.0).unwrap();
        assert!(b.value.max_abs() < 1e-12);
    }

    #[test]
    fn identity_transform_is_trivial() {
        let base = ConnectionFn {
            dim: 2,
            f: |p: &Point| Ok(Connection::new(std::array::from_fn(|c| crate::su3::pauli_x() * real(p.vec()[c])))),
        };
        let u = UnitaryFn { dim: 2, f: |_: &Point| Ok(linalg::identity(2)) };
        let p = Point::new(0.2, 0.4, -0.3);
        let a = gauge_transform(&base, &u, &p, 1e-5, 1.0).unwrap();
        assert!(a.max_abs_diff(&base.connection(&p).unwrap()) < 1e-15);
        let bad = UnitaryFn { dim: 2, f: |_: &Point| Ok(linalg::identity(2) * real(2.0)) };
        assert!(matches!(gauge_transform(&base, &bad, &p, 1e-5, 1.0), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn zero_connection_has_no_coupling_terms() {
        let mc = minimal_coupling_terms(&Connection::zeros(3), 1.0, 1.0, 1.0);
        assert_eq!(linalg::max_abs(&mc.quadratic), 0.0);
        assert!(mc.momentum.iter().all(|m| linalg::max_abs(m) == 0.0));
    }
}
