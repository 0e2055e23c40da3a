use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested computation exceeds a configured size budget.
    #[error("resource limit exceeded for {what}: estimate {estimate} > limit {limit}")]
    Resource {
        what: &'static str,
        estimate: f64,
        limit: f64,
    },
    /// A product or quotient in the density formula degenerated.
    #[error("singular evaluation: {0}")]
    Singular(String),
    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    /// A coefficient law or run configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The random-matrix model broke one of its structural identities.
    #[error("model violation: {0}")]
    ModelViolation(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical or internal failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Resource { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain;
