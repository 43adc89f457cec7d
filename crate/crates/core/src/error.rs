use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bad surface parameters: {0}")]
    BadParams(String),

    #[error("bisection stalled at width {width:.3e} (requested {tol:.3e}) after {iterations} iterations")]
    BisectionStall {
        width: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("shift {shift} produced a pivot of magnitude {pivot:.3e} at row {row}")]
    SingularShift { shift: f64, pivot: f64, row: usize },

    #[error("truncation too small: eigenvalue moved by {movement:.3e} (limit {limit:.1e})")]
    TruncationTooSmall { movement: f64, limit: f64 },

    #[error("problem too large: {0}")]
    ProblemTooLarge(String),

    #[error("Lambda = {lambda} is not below the minimal field strength {b_min}")]
    LambdaTooLarge { lambda: f64, b_min: f64 },

    #[error("fiber retention margin too small: extreme fiber xi = {xi} holds {count} eigenvalue(s)")]
    MarginTooSmall { xi: f64, count: usize },

    #[error("magnetic field vanishes at node {node}")]
    ZeroField { node: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Numerical guard errors, as opposed to malformed inputs.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::BisectionStall { .. }
                | Error::SingularShift { .. }
                | Error::TruncationTooSmall { .. }
                | Error::ProblemTooLarge(_)
                | Error::LambdaTooLarge { .. }
                | Error::MarginTooSmall { .. }
        )
    }
}
