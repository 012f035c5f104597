use thiserror::Error;

/// Errors raised by the solver and its supporting types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("argument {value} outside the admissible range [{lo}, {hi}]")]
    DomainExceeded { value: f64, lo: f64, hi: f64 },

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid piecewise spec: {0}")]
    InvalidSpec(String),

    #[error("operation requires a quadratic hamiltonian")]
    NotQuadratic,

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("target is not reachable (fixed-point residual {residual:.3e} > tolerance {tol:.3e})")]
    TargetNotReachable { residual: f64, tol: f64 },

    #[error("candidate is not a member: forward image differs from target by {residual:.3e} (tolerance {tol:.3e})")]
    NotMember { residual: f64, tol: f64 },

    #[error("bump support meets the coincidence set at {0} node(s)")]
    SupportViolation(usize),

    #[error("time step {dt:.3e} violates the stability bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
