use thiserror::Error;

/// Errors raised by the statistics, limit and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("q below 2: a linear hypothesis needs at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("empty group: group {index} has {size} observations, need at least 2")]
    EmptyGroup { index: usize, size: usize },
    #[error("all hypothesis coefficients are zero")]
    ZeroCoefficients,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index}, threshold {threshold:.3e})")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("insufficient degrees of freedom: p = {p} requires more than {dof} denominator degrees of freedom")]
    InsufficientDof { p: usize, dof: usize },
    #[error("ratio gamma2 = {0} outside (0, 1)")]
    RatioOutOfRange(f64),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("asymptotic variance is not positive ({0})")]
    NonPositiveVariance(f64),
    #[error("tau extrapolation did not converge (last change {change:.3e})")]
    NotConverged { change: f64 },
    #[error("contour integral has imaginary residual {residual:.3e} above {bound:.1e}")]
    ImaginaryResidual { residual: f64, bound: f64 },
    #[error("complex-valued data (kappa = 1) is not supported")]
    UnsupportedKappa,
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
    #[error("covariance for group {group} is not positive definite: smallest eigenvalue {min_eigenvalue:.3e}, largest {max_eigenvalue:.3e}")]
    CovarianceNotPd {
        group: usize,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
