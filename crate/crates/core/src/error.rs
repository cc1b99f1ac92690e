use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid grid or system configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched dimensions or otherwise inconsistent call.
    #[error("usage error: {0}")]
    Usage(String),

    /// A pivot block of `H - shift` is (numerically) singular; the shift sits on
    /// an eigenvalue and the caller should perturb it.
    #[error("shift {shift} is numerically an eigenvalue (singular pivot in super-block {block})")]
    NearSingular { shift: f64, block: usize },

    /// A size guard refused the request.
    #[error("resource guard: {0}")]
    Resource(String),

    /// Iterative method did not reach tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
