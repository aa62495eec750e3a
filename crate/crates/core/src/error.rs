use thiserror::Error;

/// Errors raised by the model evaluators and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    /// Phase-I could not drive the normalized infeasibility measure below zero.
    #[error("program is infeasible (best phase-I measure {measure:.3e})")]
    InfeasibleProgram { measure: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid solver state: {0}")]
    State(String),

    #[error("invalid parameters: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, Error>;
