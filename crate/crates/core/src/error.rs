use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// `Parse`/`Invariant`/`Usage` are validation failures, `Domain`/`Branch`
/// are numerical-domain failures, `NoConvergence` is a solver failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid triangulation: {0}")]
    Invariant(String),

    #[error("bad request: {0}")]
    Usage(String),

    #[error("numerical domain violation: {0}")]
    Domain(String),

    #[error("holonomy branch violation at cusp {cusp}: {msg}")]
    Branch { cusp: usize, msg: String },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
