use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numeric routine could not produce a meaningful result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Calibration table construction, persistence, or lookup failed.
    #[error("calibration table: {0}")]
    Table(String),

    /// Market data ingestion or processing failed.
    #[error("market data: {0}")]
    Market(String),

    /// An iterative fit did not converge; the message carries the best iterate.
    #[error("estimator did not converge: {0}")]
    NonConvergence(String),

    /// A Monte Carlo job was larger than the configured work budget.
    #[error("estimated work {estimated} exceeds budget {budget}; enable force to override")]
    BudgetExceeded { estimated: u128, budget: u128 },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn table(msg: impl Into<String>) -> Self {
        Error::Table(msg.into())
    }

    pub(crate) fn market(msg: impl Into<String>) -> Self {
        Error::Market(msg.into())
    }
}
