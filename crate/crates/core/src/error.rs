use thiserror::Error;

/// Errors produced by the exponent library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (distributions, rates, dimensions).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Channel dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative solver hit its iteration cap before meeting its tolerances.
    #[error(
        "solver did not converge at mu = {mu} after {iterations} iterations \
         (objective {objective:.6e}, residual {residual:.3e})"
    )]
    NonConvergence {
        mu: f64,
        iterations: usize,
        objective: f64,
        residual: f64,
        /// Rows of the best test channel reached.
        best: Vec<Vec<f64>>,
    },

    /// An enumeration would exceed its configured budget.
    #[error("budget exceeded: {quantity} = {required} > limit {limit}")]
    BudgetExceeded {
        quantity: &'static str,
        required: f64,
        limit: f64,
    },

    /// Parse failure for a channel-spec document.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
