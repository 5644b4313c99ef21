use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Covariance is asymmetric, indefinite or too close to singular.
    #[error("covariance is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Adaptive quadrature ran out of its node budget.
    #[error("quadrature did not converge within {nodes} nodes (last estimates {last} and {previous})")]
    Quadrature {
        nodes: usize,
        last: f64,
        previous: f64,
    },

    /// Closed-form and quadrature evaluations of a density disagree.
    #[error("closed-form density disagrees with quadrature by {0:e} in log space")]
    DensityMismatch(f64),

    #[error("prior {0} has no tractable marginal density")]
    UnsupportedPrior(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    /// Whether the error came from a numerical failure rather than a bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_) | Error::Quadrature { .. } | Error::DensityMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
