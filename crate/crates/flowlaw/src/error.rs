//! Crate-wide error type.

/// Errors reported by flow-law construction, evaluation, training,
/// integration, and persistence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or dataset is structurally inconsistent (shapes, depth,
    /// unsupported architecture).
    #[error("structural error: {0}")]
    Structure(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Diverged { iteration: usize, loss: f64 },

    /// The radial-return Newton solve did not converge. Carries the residual
    /// of every iterate for post-mortem inspection.
    #[error("radial return did not converge after {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    /// A model archive is missing a field, carries a malformed number, or is
    /// dimensionally inconsistent.
    #[error("archive error: {0}")]
    Archive(String),

    /// A CSV dataset file could not be parsed.
    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn archive(msg: impl Into<String>) -> Self {
        Error::Archive(msg.into())
    }

    pub(crate) fn dataset(msg: impl Into<String>) -> Self {
        Error::Dataset(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
