//! Gell-Mann generators, spin-1 operators and Hermitian decompositions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermiticity_residual, real, real_matrix, trace, CMatrix, I};

/// Anti-Hermitian tolerance accepted by the decompositions.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// A square matrix known to be Hermitian within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOLERANCE)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let residual = hermiticity_residual(&m);
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self(m))
    }

    /// Symmetrizes `m` without checking it.
    pub fn hermitized(m: &CMatrix) -> Self {
        Self(linalg::hermitize(m).0)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl std::ops::Deref for HermitianMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// `g_index = λ_index / 2`.
pub fn gellmann_matrix(index: usize) -> Result<HermitianMatrix> {
    let half = real(0.5);
    let zero = real(0.0);
    let mut m = CMatrix::from_element(3, 3, zero);
    match index {
        1 => {
            m[(0, 1)] = half;
            m[(1, 0)] = half;
        }
        2 => {
            m[(0, 1)] = -I * 0.5;
            m[(1, 0)] = I * 0.5;
        }
        3 => {
            m[(0, 0)] = half;
            m[(1, 1)] = -half;
        }
        4 => {
            m[(0, 2)] = half;
            m[(2, 0)] = half;
        }
        5 => {
            m[(0, 2)] = -I * 0.5;
            m[(2, 0)] = I * 0.5;
        }
        6 => {
            m[(1, 2)] = half;
            m[(2, 1)] = half;
        }
        7 => {
            m[(1, 2)] = -I * 0.5;
            m[(2, 1)] = I * 0.5;
        }
        8 => {
            let s = 0.5 / 3f64.sqrt();
            m[(0, 0)] = real(s);
            m[(1, 1)] = real(s);
            m[(2, 2)] = real(-2.0 * s);
        }
        _ => return Err(Error::InvalidGenerator(index)),
    }
    Ok(HermitianMatrix(m))
}

/// All eight generators in order `g_1..g_8`.
pub fn gellmann_basis() -> [CMatrix; 8] {
    std::array::from_fn(|i| gellmann_matrix(i + 1).expect("valid index").into_matrix())
}

/// Reflection `diag(1, 1, -1)` relating the two spin-1 families.
pub fn reflection() -> CMatrix {
    real_matrix(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0])
}

#[derive(Debug, Clone)]
pub struct Spin1Operators {
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub jx_tilde: CMatrix,
    pub jy_tilde: CMatrix,
}

impl Spin1Operators {
    /// `(J̃_x, J̃_y, J̃_z)`; the reflected `J_z` coincides with `J_z`.
    pub fn tilde_triplet(&self) -> [CMatrix; 3] {
        [self.jx_tilde.clone(), self.jy_tilde.clone(), self.jz.clone()]
    }

    pub fn triplet(&self) -> [CMatrix; 3] {
        [self.jx.clone(), self.jy.clone(), self.jz.clone()]
    }
}

pub fn spin1_operators(hbar: f64) -> Spin1Operators {
    let a = hbar / 2f64.sqrt();
    let jx = real_matrix(3, &[0.0, a, 0.0, a, 0.0, a, 0.0, a, 0.0]);
    let mut jy = CMatrix::zeros(3, 3);
    jy[(0, 1)] = c(0.0, -a);
    jy[(1, 0)] = c(0.0, a);
    jy[(1, 2)] = c(0.0, -a);
    jy[(2, 1)] = c(0.0, a);
    let jz = real_matrix(3, &[hbar, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -hbar]);
    let s = reflection();
    let jx_tilde = &s * &jx * &s;
    let jy_tilde = &s * &jy * &s;
    Spin1Operators { jx, jy, jz, jx_tilde, jy_tilde }
}

pub fn pauli_x() -> CMatrix {
    real_matrix(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(0.0), -I, I, real(0.0)])
}

pub fn pauli_z() -> CMatrix {
    real_matrix(2, &[1.0, 0.0, 0.0, -1.0])
}

/// `m = c0·𝟙 + Σ c_i g_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GellMannCoefficients {
    pub c0: f64,
    pub c: [f64; 8],
}

impl GellMannCoefficients {
    pub fn reconstruct(&self) -> CMatrix {
        let basis = gellmann_basis();
        let mut m = linalg::identity(3) * real(self.c0);
        for (ci, g) in self.c.iter().zip(basis.iter()) {
            m += g * real(*ci);
        }
        m
    }

    /// Coefficient of `g_index` (1-based).
    pub fn get(&self, index: usize) -> f64 {
        self.c[index - 1]
    }
}

pub fn decompose_hermitian(m: &CMatrix) -> Result<GellMannCoefficients> {
    if m.shape() != (3, 3) {
        return Err(Error::DimensionMismatch { expected: 3, found: m.nrows() });
    }
    let residual = hermiticity_residual(m);
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { residual });
    }
    let basis = gellmann_basis();
    let c = std::array::from_fn(|i| 2.0 * trace(&(&basis[i] * m)).re);
    Ok(GellMannCoefficients { c0: trace(m).re / 3.0, c })
}

/// `m = c0·𝟙 + Σ c_i σ_i` for 2×2 Hermitian matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliCoefficients {
    pub c0: f64,
    pub c: [f64; 3],
}

impl PauliCoefficients {
    pub fn reconstruct(&self) -> CMatrix {
        linalg::identity(2) * real(self.c0)
            + pauli_x() * real(self.c[0])
            + pauli_y() * real(self.c[1])
            + pauli_z() * real(self.c[2])
    }
}

pub fn decompose_pauli(m: &CMatrix) -> Result<PauliCoefficients> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
    }
    let residual = hermiticity_residual(m);
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { residual });
    }
    let half_trace = |p: CMatrix| 0.5 * trace(&(p * m)).re;
    Ok(PauliCoefficients {
        c0: 0.5 * trace(m).re,
        c: [half_trace(pauli_x()), half_trace(pauli_y()), half_trace(pauli_z())],
    })
}

/// Decomposition on the natural generator basis of the matrix dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "basis", rename_all = "kebab-case")]
pub enum Decomposition {
    Scalar { c0: f64 },
    Pauli(PauliCoefficients),
    GellMann(GellMannCoefficients),
}

impl Decomposition {
    pub fn of(m: &CMatrix) -> Result<Self> {
        match m.nrows() {
            1 => {
                let residual = m[(0, 0)].im.abs();
                if residual > HERMITIAN_TOLERANCE {
                    return Err(Error::NotHermitian { residual });
                }
                Ok(Self::Scalar { c0: m[(0, 0)].re })
            }
            2 => decompose_pauli(m).map(Self::Pauli),
            3 => decompose_hermitian(m).map(Self::GellMann),
            n => Err(Error::DimensionMismatch { expected: 3, found: n }),
        }
    }

    /// `(label, value)` pairs in a fixed order.
    pub fn labelled(&self) -> Vec<(String, f64)> {
        match self {
            Self::Scalar { c0 } => vec![("c0".into(), *c0)],
            Self::Pauli(p) => {
                let mut v = vec![("c0".to_string(), p.c0)];
                v.extend(["cx", "cy", "cz"].iter().zip(p.c).map(|(l, x)| (l.to_string(), x)));
                v
            }
            Self::GellMann(g) => {
                let mut v = vec![("c0".to_string(), g.c0)];
                v.extend(g.c.iter().enumerate().map(|(i, x)| (format!("c{}", i + 1), *x)));
                v
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn generator_examples() {
        let g1 = gellmann_matrix(1).unwrap();
        assert_eq!(g1[(0, 1)], real(0.5));
        assert_eq!(g1[(1, 0)], real(0.5));
        assert_eq!(linalg::max_abs(&g1) , 0.5);
        let g8 = gellmann_matrix(8).unwrap();
        let d = 2.0 * 3f64.sqrt();
        let expected = real_matrix(3, &[1.0 / d, 0.0, 0.0, 0.0, 1.0 / d, 0.0, 0.0, 0.0, -2.0 / d]);
        assert!(max_abs_diff(&g8, &expected) < 1e-16);
        let g3 = gellmann_matrix(3).unwrap();
        assert!(max_abs_diff(&g3, &real_matrix(3, &[0.5, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0])) == 0.0);
        assert_eq!(gellmann_matrix(0), Err(Error::InvalidGenerator(0)));
        assert_eq!(gellmann_matrix(9), Err(Error::InvalidGenerator(9)));
    }

    #[test]
    fn spin1_examples() {
        let ops = spin1_operators(1.0);
        let a = 1.0 / 2f64.sqrt();
        for (i, j) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert!((ops.jx[(i, j)] - real(a)).norm() < 1e-16);
        }
        assert!((ops.jx_tilde[(0, 1)] - real(a)).norm() < 1e-16);
        assert!((ops.jx_tilde[(1, 2)] + real(a)).norm() < 1e-16);
        let doubled = spin1_operators(2.0);
        assert!(max_abs_diff(&doubled.jx, &(ops.jx.clone() * real(2.0))) < 1e-15);
    }

    #[test]
    fn decomposition_examples() {
        let ops = spin1_operators(1.0);
        let jx = decompose_hermitian(&ops.jx).unwrap();
        for (i, ci) in jx.c.iter().enumerate() {
            let expected = if i == 0 || i == 5 { 2f64.sqrt() } else { 0.0 };
            assert!((ci - expected).abs() < 1e-15, "c{} = {}", i + 1, ci);
        }
        let id = decompose_hermitian(&linalg::identity(3)).unwrap();
        assert!((id.c0 - 1.0).abs() < 1e-16);
        assert!(id.c.iter().all(|x| x.abs() < 1e-16));
        let bad = CMatrix::from_row_slice(3, 3, &[real(0.0), real(1.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.0)]);
        assert!(matches!(decompose_hermitian(&bad), Err(Error::NotHermitian { .. })));
        assert!(matches!(decompose_hermitian(&pauli_x()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pauli_round_trip() {
        let m = CMatrix::from_row_slice(2, 2, &[real(0.3), c(0.1, -0.7), c(0.1, 0.7), real(-1.2)]);
        let p = decompose_pauli(&m).unwrap();
        assert!(max_abs_diff(&p.reconstruct(), &m) < 1e-15);
    }
}
