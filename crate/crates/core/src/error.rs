use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode grids differ ({left} vs {right} modes)")]
    GridMismatch { left: usize, right: usize },

    #[error("dimension mismatch: operator acts on {operator} modes, operand has {operand}")]
    DimensionMismatch { operator: usize, operand: usize },

    #[error("matrix is not unitary: max |U U^dag - I| = {defect:.3e} exceeds {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("matrix dimension {dim} is odd; canonical coordinates come in (q, p) pairs")]
    OddDimension { dim: usize },

    #[error("secret key must be 1-64 bytes, got {len}")]
    BadKeyLength { len: usize },

    #[error("phase resolution N' must be at least 1")]
    ZeroResolution,

    #[error("N' = {nprime} is not a multiple of N = {n}")]
    ResolutionNotMultiple { nprime: u64, n: u64 },

    #[error(
        "f = {f} violates f ln N > A^2; need f > {threshold} (the 2 C_E / R threshold)"
    )]
    InvalidF { f: f64, threshold: f64 },

    #[error("strong converse regime requires C_E < R (got C_E = {c_e}, R = {r})")]
    Regime { r: f64, c_e: f64 },

    #[error("amplitudes are identically zero")]
    ZeroAmplitudes,

    #[error("PPM window shorter than one carrier cycle: N = {n} exceeds 2 j_c = {two_jc}")]
    WindowTooShort { n: u64, two_jc: u64 },

    #[error("invalid {what}: {why}")]
    InvalidInput { what: &'static str, why: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            why: why.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
