use thiserror::Error;

/// Failure modes of the numerical layer.
///
/// Values are widened to `f64` so the error type does not depend on the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive routine could not meet its tolerance within its budget.
    #[error("{routine} did not converge: best estimate {estimate:e}, achieved error {achieved:e}")]
    Convergence {
        routine: &'static str,
        estimate: f64,
        achieved: f64,
    },

    /// The denominator of a ratio of integrals vanished.
    #[error("singular ratio: {0}")]
    SingularRatio(String),

    /// Probability leaked through the Fock-space cutoff.
    #[error("truncation at N = {truncation} leaked {leakage:e} of probability; increase N")]
    Truncation { truncation: usize, leakage: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
