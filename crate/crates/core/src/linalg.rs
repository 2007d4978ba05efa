//! Small dense complex linear algebra shared by the other modules.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type Vec3 = Vector3<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a square matrix from real row-major entries.
pub fn real_matrix(n: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), n * n);
    CMatrix::from_fn(n, n, |i, j| real(entries[i * n + j]))
}

pub fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Frobenius norm of the anti-Hermitian part `(M - M†)/2`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    ((m - m.adjoint()) * real(0.5)).norm()
}

/// Symmetric average `(M + M†)/2` together with the discarded anti-Hermitian norm.
pub fn hermitize(m: &CMatrix) -> (CMatrix, f64) {
    let residual = hermiticity_residual(m);
    ((m + m.adjoint()) * real(0.5), residual)
}

/// Frobenius distance of `U†U` from the identity.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |acc: f64, s| acc.max(*s))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let (h, _) = hermitize(m);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `exp(i t H)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (h, _) = hermitize(h);
    let eig = h.symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&lambda| cis(t * lambda)),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Orthonormal basis of the null space of `m` (columns), with the singular-value
/// threshold `rel_tol * s_max`. Returns the basis and the numerical rank.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let (rows, cols) = m.shape();
    // nalgebra's SVD is thin; padding with zero rows yields the full right basis.
    let n = rows.max(cols);
    let mut padded = CMatrix::zeros(n, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s = &svd.singular_values;
    let s_max = s.iter().fold(0.0_f64, |acc, x| acc.max(*x));
    let threshold = rel_tol * s_max.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let rank = order.iter().filter(|&&i| s[i] > threshold).count();
    let null_idx = &order[rank..];
    let mut basis = CMatrix::zeros(cols, null_idx.len());
    for (col, &i) in null_idx.iter().enumerate() {
        for j in 0..cols {
            basis[(j, col)] = v_t[(i, j)].conj();
        }
    }
    (basis, rank)
}

/// Unitary polar factor `W V†` of `m = W Σ V†`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

/// Rotates the columns of `frame` inside their span so that `frame† reference`
/// becomes Hermitian positive semidefinite.
pub fn procrustes_align(frame: &CMatrix, reference: &CMatrix) -> CMatrix {
    let overlap = frame.adjoint() * reference;
    frame * polar_unitary(&overlap)
}

/// Unit vector along a Cartesian axis.
pub fn axis(index: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[index] = 1.0;
    e
}

/// `Σ_c v_c M_c` for a real 3-vector and three matrices.
pub fn contract(v: &Vec3, m: &[CMatrix; 3]) -> CMatrix {
    &m[0] * real(v[0]) + &m[1] * real(v[1]) + &m[2] * real(v[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_lambda_row() {
        let m = CMatrix::from_row_slice(1, 2, &[real(1.0), real(1.0)]);
        let (basis, rank) = null_space(&m, 1e-10);
        assert_eq!(rank, 1);
        assert_eq!(basis.ncols(), 1);
        let v = basis.column(0);
        assert!(((v[0] + v[1]).norm()) < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn procrustes_makes_overlap_positive() {
        let reference = CMatrix::identity(3, 2);
        let rot = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), real(0.0), real(0.0), c(0.6, 0.8)]);
        let frame = &reference * rot;
        let aligned = procrustes_align(&frame, &reference);
        assert!(max_abs_diff(&aligned, &reference) < 1e-14);
    }

    #[test]
    fn exponential_of_pauli() {
        let sx = real_matrix(2, &[0.0, 1.0, 1.0, 0.0]);
        let u = expm_i_hermitian(&sx, std::f64::consts::FRAC_PI_2);
        let expected = CMatrix::from_row_slice(2, 2, &[real(0.0), I, I, real(0.0)]);
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }
}
