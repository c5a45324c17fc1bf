use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel audit inconclusive: {0}")]
    AuditInconclusive(String),

    #[error("kernel rejected by audit: {0}")]
    KernelRejected(String),

    #[error("singular evaluation at x = {x}: point must lie strictly inside ({a}, {b})")]
    SingularEvaluation { x: f64, a: f64, b: f64 },

    #[error("assembly accuracy: entry ({row}, {col}) has estimated quadrature error {estimate:e} > {tol:e}")]
    AssemblyAccuracy { row: usize, col: usize, estimate: f64, tol: f64 },

    #[error("assembly corruption: {0}")]
    AssemblyCorruption(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("index {k} splits a cluster of numerically repeated eigenvalues (λ_{k} ≈ λ_{next})", next = .k + 1)]
    ClusterSplit { k: usize },

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("nonresonant system numerically singular (min pivot {min_pivot:e}, scale {scale:e}); the operator or spectrum is inconsistent")]
    NonresonanceContradiction { min_pivot: f64, scale: f64 },

    #[error("unauditable: {0}")]
    Unauditable(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, trace: Vec<f64> },

    #[error("hypothesis gate: {0}")]
    HypothesisGate(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },

    #[error("config validation error at {path}: {message}")]
    ConfigValidation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
