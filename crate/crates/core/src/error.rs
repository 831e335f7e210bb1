use thiserror::Error;

/// Errors raised by the constructions and experiments in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A kernel was evaluated at the identity, where it is singular.
    #[error("kernel evaluated at the identity (singularity)")]
    Singularity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid word digit {0}, digits must lie in 1..=6")]
    InvalidDigit(u8),

    #[error("atoms {0} and {1} coincide")]
    DuplicateAtom(usize, usize),

    #[error("coincident points")]
    CoincidentPoints,

    #[error("radius {radius} is below the discretization floor {floor}")]
    RadiusBelowFloor { radius: f64, floor: f64 },

    /// A construction would exceed its configured resource budget.
    #[error("{what} requires {required} items, budget is {limit}")]
    Budget {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("no convergence after {iterations} iterations (last estimate {last_estimate})")]
    NonConvergence {
        iterations: usize,
        last_estimate: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
