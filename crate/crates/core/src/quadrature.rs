//! Gauss-Legendre nodes and polynomial extrapolation.

use std::f64::consts::PI;

use crate::linalg::{real, CMatrix};

/// Nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Lagrange weights evaluating the interpolating polynomial through `ts` at 0.
pub fn extrapolation_weights(ts: &[f64]) -> Vec<f64> {
    (0..ts.len())
        .map(|i| {
            ts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &tj)| -tj / (ts[i] - tj))
                .product()
        })
        .collect()
}

/// Value at 0 of the polynomial interpolating `(ts[i], values[i])`.
pub fn extrapolate_to_zero(ts: &[f64], values: &[CMatrix]) -> CMatrix {
    assert_eq!(ts.len(), values.len());
    let w = extrapolation_weights(ts);
    let mut out = CMatrix::zeros(values[0].nrows(), values[0].ncols());
    for (wi, v) in w.iter().zip(values) {
        out += v * real(*wi);
    }
    out
}

/// Sum in a fixed pairwise order, independent of how the terms were produced.
pub fn pairwise_sum(terms: &[CMatrix]) -> CMatrix {
    match terms.len() {
        0 => panic!("empty sum"),
        1 => terms[0].clone(),
        n => pairwise_sum(&terms[..n / 2]) + pairwise_sum(&terms[n / 2..]),
    }
}
