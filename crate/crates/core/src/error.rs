use thiserror::Error;

/// Errors raised by the numerical routines and verification harnesses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {evaluations} evaluations (error estimate {error_estimate:e}, target {target:e})")]
    QuadratureNonConvergence {
        evaluations: usize,
        error_estimate: f64,
        target: f64,
    },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge after {iterations} iterations, bracket [{lo}, {hi}]")]
    RootNonConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("bracket expansion failed: {reason}; trace: {trace:?}")]
    BracketExpansion { reason: String, trace: Vec<(f64, f64)> },

    #[error("degenerate region: {0}")]
    Degenerate(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),
}

pub type Result<T> = std::result::Result<T, Error>;
