//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by truncated Taylor (jet) arithmetic.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum JetError {
    #[error("jet evaluation requires y != 0 (the metric is only smooth on the slit tangent bundle)")]
    ZeroFiberVector,
    #[error("jets have mismatched base points: {0:?} vs {1:?}")]
    BasePointMismatch(Vec<f64>, Vec<f64>),
    #[error("jets have mismatched truncation data: ({0} vars, order {1}) vs ({2} vars, order {3})")]
    SpaceMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("sqrt of a jet with non-positive value {0}")]
    SqrtNonPositive(f64),
    #[error("log of a jet with non-positive value {0}")]
    LogNonPositive(f64),
    #[error("non-finite jet coefficient at multi-index {multi_index:?} (coordinate direction {direction})")]
    NonFinite {
        multi_index: Vec<u8>,
        direction: String,
    },
}

/// Errors raised while assembling the pointwise Finsler/Chern package.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("fundamental tensor is not positive definite: smallest eigenvalue {min_eigenvalue:.3e} at x={x:?}, y={y:?}")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        x: Vec<f64>,
        y: Vec<f64>,
    },
    #[error("fundamental tensor is numerically singular: condition number {cond:.3e} exceeds 1e8")]
    IllConditioned { cond: f64 },
    #[error("unknown metric `{0}`; known metrics: {1}")]
    UnknownMetric(String, String),
    #[error("invalid parameter `{name}` for metric `{metric}`: {reason}")]
    InvalidParameter {
        metric: String,
        name: String,
        reason: String,
    },
    #[error("curvature two-form has a nonvanishing delta-y wedge delta-y block: max |coeff| = {0:.3e}")]
    VerticalVerticalBlock(f64),
    #[error("Berwald gate: Chern-Minkowski curvature P does not vanish (max |P| = {p_norm:.3e} > {gate:.1e})")]
    BerwaldGate { p_norm: f64, gate: f64 },
    #[error("form degree {got} does not match the expected degree {expected}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("fiber-only form used as a global form on SM (base integration requires prior fiber integration)")]
    FiberOnlyMisuse,
    #[error("pfaffian requires an even-dimensional antisymmetric matrix (got {dim}x{dim}, asymmetry {asym:.3e})")]
    PfaffianInput { dim: usize, asym: f64 },
    #[error("quadrature did not converge: residual {residual:.3e} at the finest ladder rung")]
    Inconclusive { residual: f64 },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
