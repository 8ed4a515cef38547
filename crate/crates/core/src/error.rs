use thiserror::Error;

/// Errors raised by the model constructors and the throughput routes.
#[derive(Debug, Error)]
pub enum Error {
    /// An input falls outside the admissible parameter domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be positive definite failed to factor.
    #[error("matrix not positive definite ({context}) at pivot {pivot}")]
    NotPositiveDefinite { context: String, pivot: usize },

    /// A matrix that must be invertible is numerically singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Characteristic roots coincide, so the closed form divides by zero.
    #[error("degenerate characteristic roots r1 = r2 = {0}")]
    DegenerateRoots(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
