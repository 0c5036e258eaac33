use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation axis has zero length")]
    ZeroAxis,

    #[error("direction {index} is not a unit vector (norm {norm})")]
    NonUnitDirection { index: usize, norm: f64 },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("at least one integration step is required")]
    NoSteps,

    #[error("index {index} out of range (valid: {min}..={max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("Jacobi SVD did not converge after {sweeps} sweeps (max relative off-diagonal {off_diagonal:e})")]
    SvdNoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point at radius {radius} lies outside the gap [{r_in}, {r_out}]")]
    OutsideGap { radius: f64, r_in: f64, r_out: f64 },

    #[error("normalization is undefined: all reference tensors are zero")]
    ZeroNormalization,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{rule} bound is only tabulated for N <= {max}, got N = {n}")]
    UntabulatedBound { rule: &'static str, n: usize, max: usize },

    #[error("unknown bound rule `{0}` (expected fundamental, direct_sum or expected_vgn_reference)")]
    UnknownRule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
