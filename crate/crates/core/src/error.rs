use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The problem description violates one or more structural invariants.
    #[error("invalid problem specification: {}", .0.join("; "))]
    Structural(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested operation is not valid for this parameter regime
    /// (e.g. unequal frequencies for the separable reduction).
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical method failed to converge or to bracket.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The coupling form is nonpositive on the sphere, so no field has `J > 0`.
    #[error("no ground-states: {0}")]
    NoGroundStates(String),

    #[error("undefined quotient: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
