use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("field `{field}` must be positive (got {value})")]
    NonPositiveMass { field: &'static str, value: f64 },
    #[error("field `{field}` must be positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("field `{field}`: internal levels must start at 0 and be strictly increasing")]
    NonMonotoneLevels { field: &'static str },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("level {level} out of range ({count} levels)")]
    LevelOutOfRange { level: usize, count: usize },
    #[error("levels {0} and {1} are degenerate; fractional shift undefined")]
    DegenerateLevels(usize, usize),
    #[error("truncation dimension {0} too small (need at least 2)")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mode frame was derived from different system parameters")]
    ParamMismatch,
    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,
    #[error("no convergence up to dimension {0}")]
    NoConvergence(usize),
    #[error("truncated basis insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("phase jump of {jump:.3} rad between grid points {index} and {next}; refine the time grid", next = index + 1)]
    GridTooCoarse { index: usize, jump: f64 },
    #[error("scalar optimizer failed: {0}")]
    OptimizerFailure(String),
    #[error("cross-check failed for {what}: relative deviation {deviation:e} exceeds {tolerance:e}")]
    CrossCheckFailed { what: &'static str, deviation: f64, tolerance: f64 },
    #[error("no minimum exists without gravity (shift is monotone in trap frequency)")]
    ZeroGravity,
    #[error("operation requires g = 0")]
    GravityNotSupported,
    #[error("probabilities not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("invalid internal distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("log Q profile is not Gaussian (residual {0:e})")]
    NonGaussianProfile(f64),
}
