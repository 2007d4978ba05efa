use thiserror::Error;

use crate::beams::Side;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator index {0} is outside 1..=8")]
    InvalidGenerator(usize),

    #[error("matrix is not Hermitian (anti-Hermitian residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("all couplings of the {0} tripod vanish")]
    DegenerateCoupling(Side),

    #[error("dark space has dimension {found}, expected {expected}")]
    AmbiguousDarkSpace { expected: usize, found: usize },

    #[error("point ({x:.6}, {y:.6}, {z:.6}) is too close to the {what}")]
    NearSingularity { x: f64, y: f64, z: f64, what: &'static str },

    #[error("azimuthal variation {variation:.3e} exceeds the bound {bound:.3e}")]
    ExcessiveAzimuthalVariation { variation: f64, bound: f64 },

    #[error("pole extrapolation did not converge (spread {spread:.3e})")]
    ProfileNotConverged { spread: f64 },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
