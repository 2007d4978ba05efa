//! Coupling Hamiltonian and its dark subspace, analytic and numeric.

use std::sync::Arc;

use serde::Serialize;

use crate::beams::{
    ParamField, Point, RabiField, RabiValues, Scheme, Side, SideParams, SingularityGuard, TripodParams,
};
use crate::error::{Error, Result};
use crate::linalg::{self, cis, real, CMatrix, Vec3, C64};

/// Relative singular-value threshold separating dark from bright directions.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingHamiltonian {
    pub scheme: Scheme,
    pub matrix: CMatrix,
}

impl CouplingHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Excited × ground block.
    pub fn coupling_block(&self) -> CMatrix {
        let ng = self.scheme.n_ground();
        let ne = self.scheme.n_excited();
        self.matrix.view((ng, 0), (ne, ng)).into_owned()
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }
}

pub fn coupling_hamiltonian(values: &RabiValues, scheme: Scheme, hbar: f64) -> CouplingHamiltonian {
    let n = scheme.n_levels();
    let mut m = CMatrix::zeros(n, n);
    for t in scheme.transitions() {
        let v = values.get(t.side, t.label) * (-hbar);
        m[(t.excited, t.ground)] = v;
        m[(t.ground, t.excited)] = v.conj();
    }
    CouplingHamiltonian { scheme, matrix: m }
}

/// Which analytic dark basis a frame is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeTag {
    /// `(D_l, D_0, D_r)` of the two-tripod scheme.
    TwoTripod,
    /// Single tripod; the pair built on the two outer levels and the shared one.
    TripodSharedPair,
    /// Single tripod; the pair built on levels 1 and 3.
    TripodOuterPair,
    AlignedNumeric,
}

impl GaugeTag {
    pub fn dark_dim(self) -> Option<usize> {
        match self {
            GaugeTag::TwoTripod => Some(3),
            GaugeTag::TripodSharedPair | GaugeTag::TripodOuterPair => Some(2),
            GaugeTag::AlignedNumeric => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkFrame {
    /// Columns are the dark vectors in the full level basis.
    pub vectors: CMatrix,
    pub gauge: GaugeTag,
}

impl DarkFrame {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn n_levels(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.adjoint() * &self.vectors;
        linalg::max_abs_diff(&gram, &linalg::identity(self.dim()))
    }

    /// Largest `‖H v‖` over the columns.
    pub fn annihilation_residual(&self, h: &CouplingHamiltonian) -> f64 {
        let hv = &h.matrix * &self.vectors;
        hv.column_iter().fold(0.0, |acc, col| acc.max(col.norm()))
    }

    /// Largest modulus among the excited-level components.
    pub fn excited_weight(&self, scheme: Scheme) -> f64 {
        let ng = scheme.n_ground();
        self.vectors.rows(ng, scheme.n_excited()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn overlap(&self, other: &DarkFrame) -> CMatrix {
        self.vectors.adjoint() * &other.vectors
    }

    pub fn projector(&self) -> CMatrix {
        &self.vectors * self.vectors.adjoint()
    }
}

/// Normalized weights of the coupled dark state, `cotθ_l/α`, `cotθ_r/α`, `1/α`,
/// written with sines and cosines so that θ = 0 on one side stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingWeights {
    pub left: f64,
    pub right: f64,
    pub shared: f64,
    /// Partial derivatives with respect to `(θ_l, θ_r)`.
    pub d_left: [f64; 2],
    pub d_right: [f64; 2],
    pub d_shared: [f64; 2],
}

impl MixingWeights {
    pub fn new(params: &TripodParams) -> Result<Self> {
        let (sl, cl) = params.left.theta.sin_cos();
        let (sr, cr) = params.right.theta.sin_cos();
        let norm_sq = sl * sl * sr * sr + cl * cl * sr * sr + sl * sl * cr * cr;
        if norm_sq <= f64::EPSILON * f64::EPSILON {
            return Err(Error::DegenerateCoupling(if sl.abs() <= sr.abs() { Side::Left } else { Side::Right }));
        }
        let n = norm_sq.sqrt();
        let dn = [sl * cl * cr * cr / n, sr * cr * cl * cl / n];
        let ratio = |num: f64, d_num: [f64; 2]| -> (f64, [f64; 2]) {
            (num / n, [d_num[0] / n - num * dn[0] / norm_sq, d_num[1] / n - num * dn[1] / norm_sq])
        };
        let (left, d_left) = ratio(cl * sr, [-sl * sr, cl * cr]);
        let (right, d_right) = ratio(sl * cr, [cl * cr, -sl * sr]);
        let (shared, d_shared) = ratio(sl * sr, [cl * sr, sl * cr]);
        Ok(Self { left, right, shared, d_left, d_right, d_shared })
    }

    pub fn gradients(&self, grad_theta_l: &Vec3, grad_theta_r: &Vec3) -> [Vec3; 3] {
        let g = |d: [f64; 2]| grad_theta_l * d[0] + grad_theta_r * d[1];
        [g(self.d_left), g(self.d_right), g(self.d_shared)]
    }
}

/// Amplitudes of the outer-state combinations of one tripod, relative to the shared-level phase:
/// `(sinφ e^{iS31}, -cosφ e^{iS32})` for the uncoupled state and
/// `(cosφ e^{iS31}, sinφ e^{iS32})` for the part entering the coupled state.
fn outer_combinations(side: &SideParams) -> ([C64; 2], [C64; 2]) {
    let (sp, cp) = side.phi.sin_cos();
    let e31 = cis(side.phase_diff(3, 1));
    let e32 = cis(side.phase_diff(3, 2));
    ([e31 * sp, -e32 * cp], [e31 * cp, e32 * sp])
}

/// Two-tripod frame, 7 levels × `(D_l, D_0, D_r)`.
pub fn two_tripod_vectors(params: &TripodParams) -> Result<CMatrix> {
    let w = MixingWeights::new(params)?;
    let (dl, ul) = outer_combinations(&params.left);
    let (dr, ur) = outer_combinations(&params.right);
    let mut m = CMatrix::zeros(7, 3);
    m[(0, 0)] = dl[0];
    m[(1, 0)] = dl[1];
    m[(4, 2)] = dr[0];
    m[(3, 2)] = dr[1];
    m[(0, 1)] = ul[0] * w.left;
    m[(1, 1)] = ul[1] * w.left;
    m[(2, 1)] = real(-w.shared);
    m[(4, 1)] = ur[0] * w.right;
    m[(3, 1)] = ur[1] * w.right;
    Ok(m)
}

/// Single-tripod pair `(D_1, D_2)` involving the shared level, 4 levels × 2.
pub fn tripod_shared_pair(side: &SideParams) -> CMatrix {
    let (st, ct) = side.theta.sin_cos();
    let (d, u) = outer_combinations(side);
    let mut m = CMatrix::zeros(4, 2);
    m[(0, 0)] = d[0];
    m[(1, 0)] = d[1];
    m[(0, 1)] = u[0] * ct;
    m[(1, 1)] = u[1] * ct;
    m[(2, 1)] = real(-st);
    m
}

/// Single-tripod pair `(D'_1, D'_2)` where `D'_1` lives on levels 1 and 3, 4 levels × 2.
pub fn tripod_outer_pair(side: &SideParams) -> Result<CMatrix> {
    let (st, ct) = side.theta.sin_cos();
    let (sp, cp) = side.phi.sin_cos();
    let (a1, a2, a3) = (st * cp, st * sp, ct);
    let n13 = (a1 * a1 + a3 * a3).sqrt();
    if n13 == 0.0 {
        return Err(Error::DegenerateCoupling(Side::Left));
    }
    let e21 = cis(side.phase_diff(2, 1));
    let e23 = cis(side.phase_diff(2, 3));
    let mut m = CMatrix::zeros(4, 2);
    m[(0, 0)] = e21 * (a3 / n13);
    m[(2, 0)] = e23 * (-a1 / n13);
    m[(0, 1)] = e21 * (a1 * a2 / n13);
    m[(2, 1)] = e23 * (a3 * a2 / n13);
    m[(1, 1)] = real(-n13);
    Ok(m)
}

pub fn dark_frame_analytic(params: &TripodParams, scheme: Scheme, gauge: GaugeTag) -> Result<DarkFrame> {
    let vectors = match (gauge, scheme) {
        (GaugeTag::TwoTripod, s) if s.is_two_tripod() => two_tripod_vectors(params)?,
        (GaugeTag::TripodSharedPair, Scheme::SingleTripod) => tripod_shared_pair(&params.left),
        (GaugeTag::TripodOuterPair, Scheme::SingleTripod) => tripod_outer_pair(&params.left)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no analytic {:?} frame for the {:?} scheme",
                gauge, scheme
            )))
        }
    };
    Ok(DarkFrame { vectors, gauge })
}

/// Orthonormal basis of the dark space in the full level basis, in whatever gauge
/// the decomposition returns.
pub fn dark_space(values: &RabiValues, scheme: Scheme) -> Result<CMatrix> {
    let h = coupling_hamiltonian(values, scheme, 1.0);
    let (basis, _) = linalg::null_space(&h.coupling_block(), NULL_SPACE_TOLERANCE);
    let expected = scheme.dark_dim();
    if basis.ncols() != expected {
        return Err(Error::AmbiguousDarkSpace { expected, found: basis.ncols() });
    }
    let mut full = CMatrix::zeros(scheme.n_levels(), expected);
    full.view_mut((0, 0), (scheme.n_ground(), expected)).copy_from(&basis);
    Ok(full)
}

/// Null space of the coupling, rotated onto `reference` by the polar factor of the overlap.
pub fn dark_frame_numeric(values: &RabiValues, scheme: Scheme, reference: &DarkFrame) -> Result<DarkFrame> {
    let space = dark_space(values, scheme)?;
    if reference.vectors.shape() != space.shape() {
        return Err(Error::DimensionMismatch { expected: space.ncols(), found: reference.dim() });
    }
    Ok(DarkFrame { vectors: linalg::procrustes_align(&space, &reference.vectors), gauge: GaugeTag::AlignedNumeric })
}

/// A smooth map from points to dark frames.
pub trait FrameField: Send + Sync {
    fn dim(&self) -> usize;
    fn frame(&self, p: &Point) -> Result<CMatrix>;
    fn guard(&self) -> Option<SingularityGuard> {
        None
    }
}

/// Closed-form frames built from a parameter field.
pub struct AnalyticFrames {
    pub params: Arc<dyn ParamField>,
    pub scheme: Scheme,
    pub gauge: GaugeTag,
    pub guard: Option<SingularityGuard>,
}

impl FrameField for AnalyticFrames {
    fn dim(&self) -> usize {
        self.gauge.dark_dim().unwrap_or(self.scheme.dark_dim())
    }

    fn frame(&self, p: &Point) -> Result<CMatrix> {
        let params = self.params.params(p)?;
        Ok(dark_frame_analytic(&params, self.scheme, self.gauge)?.vectors)
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.guard
    }
}

/// Null-space frames aligned point by point to a reference field.
pub struct NumericFrames {
    pub rabi: Arc<dyn RabiField>,
    pub reference: Arc<dyn FrameField>,
}

impl FrameField for NumericFrames {
    fn dim(&self) -> usize {
        self.reference.dim()
    }

    fn frame(&self, p: &Point) -> Result<CMatrix> {
        let reference = DarkFrame { vectors: self.reference.frame(p)?, gauge: GaugeTag::AlignedNumeric };
        Ok(dark_frame_numeric(&self.rabi.rabi(p), self.rabi.scheme(), &reference)?.vectors)
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.reference.guard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{parametrize_rabi, Side};
    use crate::linalg::c;
    use std::f64::consts::FRAC_PI_2;

    fn side(theta: f64, phi: f64, phases: [f64; 3]) -> SideParams {
        SideParams { omega: 1.0, theta, phi, phases }
    }

    #[test]
    fn hamiltonian_examples() {
        let zero = coupling_hamiltonian(&RabiValues::default(), Scheme::Rubidium2Tripod, 1.0);
        assert_eq!(linalg::max_abs(&zero.matrix), 0.0);
        let mut v = RabiValues::default();
        v.set(Side::Left, 1, c(1.0, 0.0));
        let h = coupling_hamiltonian(&v, Scheme::Rubidium2Tripod, 1.0);
        assert_eq!(h.matrix[(5, 0)], c(-1.0, 0.0));
        assert_eq!(h.matrix[(0, 5)], c(-1.0, 0.0));
        assert_eq!(linalg::max_abs(&h.matrix), 1.0);
        assert_eq!(h.matrix.iter().filter(|z| z.norm() > 0.0).count(), 2);
    }

    #[test]
    fn decoupled_right_side_frame() {
        let params = TripodParams { left: side(0.7, 0.3, [0.1, 0.2, 0.3]), right: side(FRAC_PI_2, 0.4, [0.5, -0.2, 1.0]) };
        let m = two_tripod_vectors(&params).unwrap();
        for row in [0, 1, 2, 5, 6] {
            assert!(m[(row, 2)].norm() < 1e-15);
        }
        let both = TripodParams { left: side(FRAC_PI_2, 0.3, [0.0; 3]), right: side(FRAC_PI_2, 0.4, [0.0; 3]) };
        let m = two_tripod_vectors(&both).unwrap();
        let mut e3 = CMatrix::zeros(7, 1);
        e3[(2, 0)] = c(-1.0, 0.0);
        assert!(linalg::max_abs_diff(&m.columns(1, 1).into_owned(), &e3) < 1e-15);
    }

    #[test]
    fn both_thetas_zero_is_degenerate() {
        let params = TripodParams { left: side(0.0, 0.0, [0.0; 3]), right: side(0.0, 0.0, [0.0; 3]) };
        assert!(matches!(two_tripod_vectors(&params), Err(Error::DegenerateCoupling(_))));
    }

    #[test]
    fn one_theta_zero_uses_limit_form() {
        let params = TripodParams { left: side(0.0, 0.2, [0.3, 0.1, 0.0]), right: side(0.9, 0.6, [0.2, 0.4, 0.7]) };
        let frame = dark_frame_analytic(&params, Scheme::Rubidium2Tripod, GaugeTag::TwoTripod).unwrap();
        assert!(frame.orthonormality_error() < 1e-14);
        let h = coupling_hamiltonian(&rabi_of(&params), Scheme::Rubidium2Tripod, 1.0);
        assert!(frame.annihilation_residual(&h) < 1e-14);
    }

    fn rabi_of(params: &TripodParams) -> RabiValues {
        let amps = params.amplitudes();
        let mut v = RabiValues::default();
        for t in Scheme::Rubidium2Tripod.transitions() {
            let a = match t.side {
                Side::Left => amps.left[t.slot],
                Side::Right => amps.right[t.slot],
            };
            v.set(t.side, t.label, a);
        }
        v
    }

    #[test]
    fn lambda_dark_state() {
        let mut v = RabiValues::default();
        v.set(Side::Left, 1, c(1.0, 0.0));
        v.set(Side::Left, 2, c(1.0, 0.0));
        let d = dark_space(&v, Scheme::Lambda).unwrap();
        assert_eq!(d.shape(), (3, 1));
        assert!((d[(0, 0)] + d[(1, 0)]).norm() < 1e-14);
        assert!((d[(0, 0)].norm() - 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(d[(2, 0)].norm(), 0.0);
    }

    #[test]
    fn missing_right_tripod_is_ambiguous() {
        let mut v = RabiValues::default();
        v.set(Side::Left, 1, c(1.0, 0.0));
        v.set(Side::Left, 2, c(0.3, 0.2));
        v.set(Side::Left, 3, c(0.5, 0.0));
        assert_eq!(
            dark_space(&v, Scheme::Rubidium2Tripod),
            Err(Error::AmbiguousDarkSpace { expected: 3, found: 4 })
        );
    }

    #[test]
    fn single_tripod_pairs_are_dark() {
        let s = side(1.1, 0.7, [0.4, -1.3, 2.0]);
        let params = TripodParams { left: s, right: SideParams::decoupled() };
        let amps = params.amplitudes();
        let mut v = RabiValues::default();
        for i in 0..3 {
            v.set(Side::Left, i + 1, amps.left[i]);
        }
        let h = coupling_hamiltonian(&v, Scheme::SingleTripod, 1.0);
        for gauge in [GaugeTag::TripodSharedPair, GaugeTag::TripodOuterPair] {
            let f = dark_frame_analytic(&params, Scheme::SingleTripod, gauge).unwrap();
            assert!(f.orthonormality_error() < 1e-14);
            assert!(f.annihilation_residual(&h) < 1e-14);
        }
        let p = parametrize_rabi(&v, Scheme::SingleTripod).unwrap();
        assert!((p.left.theta - 1.1).abs() < 1e-12);
    }
}
