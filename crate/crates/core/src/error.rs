use thiserror::Error;

/// Errors raised by the geometry, quadrature and reconstruction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("points coincide (separation {separation:e} <= {eps:e})")]
    DegeneratePair { separation: f64, eps: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("boundary curve is not convex: {0}")]
    NonConvex(String),

    #[error("chord root refinement did not converge after {iterations} iterations")]
    RootFindFailure { iterations: usize },

    #[error("offset {a} outside trusted range [{lo}, {hi}]")]
    OutOfValidRange { a: f64, lo: f64, hi: f64 },

    #[error("distance {d} outside admissible range (0, {limit})")]
    BadDistance { d: f64, limit: f64 },

    #[error("function support violates the domain margin: {0}")]
    SupportViolation(String),

    #[error("lattices do not match: {0}")]
    LatticeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
