//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not invertible (|det| = {det:.3e})")]
    NotInvertible { det: f64 },

    #[error("determinant must have modulus 1, got {det:.6}")]
    NonUnitDeterminant { det: f64 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("zero vector cannot be projectivized")]
    ZeroVector,

    #[error("point is outside the cone (margin {margin:.3e})")]
    OutsideCone { margin: f64 },

    #[error("cone is not full-dimensional (affine dimension {found} < {expected})")]
    NotFullDimensional { found: usize, expected: usize },

    #[error("cone is not properly convex: {0}")]
    NotProperlyConvex(String),

    #[error("supporting hyperplane not unique at the given boundary point")]
    SupportNotUnique,

    #[error("point is not on the cone boundary (margin {margin:.3e})")]
    NotOnBoundary { margin: f64 },

    #[error("invalid word {word:?}: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("matrix is not parabolic")]
    NotParabolic,

    #[error("parabolic fixed direction is not unique")]
    FixedDirectionNotUnique,

    #[error("cusp {cusp:?} failed validation: {reason}")]
    CuspValidation { cusp: String, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("enumeration too shallow: no certified facet (max required radius {max_r_req:.3e}, used {r_used:.3e})")]
    EnumerationTooShallow { max_r_req: f64, r_used: f64 },

    #[error("pairing inconsistency: {0}")]
    PairingInconsistency(String),

    #[error("fixed-point hypothesis violated for cusp {cusp:?}")]
    HypothesisViolated { cusp: String },

    #[error("fixed-point tracking ambiguous for cusp {cusp:?} (nearest {nearest:.3e}, second {second:.3e})")]
    AmbiguousTracking {
        cusp: String,
        nearest: f64,
        second: f64,
    },

    #[error("expected exactly one cusp, found {found}; use the scale-parameterized entry point")]
    MultiCusp { found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
