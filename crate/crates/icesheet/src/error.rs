use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit codes: configuration and domain errors
/// exit with 2, solver failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation
    /// (negative length, non-positive transformed state, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate their invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A run configuration (file or flags) is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A stochastic path integration produced a non-finite state.
    #[error("integration failure on path {path_index} at step {step}")]
    Integration { path_index: usize, step: usize },

    /// The Fokker-Planck solver violated one of its contracts
    /// (mass drift, negative density, non-finite values).
    #[error("solver error: {0}")]
    Solver(String),

    /// A boundary-value solve did not converge. Carries the last iterate
    /// so callers can inspect or continue from it.
    #[error("no convergence in {context}: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        context: String,
        residual: f64,
        iterations: usize,
        last_iterate: Vec<f64>,
    },

    /// A maximal likely trajectory never reaches the requested state.
    #[error("trajectory never arrives at X = {target} km")]
    ArrivalUndefined { target: f64 },

    /// The bisection predicate is constant over the bracket.
    #[error("no threshold in bracket: predicate is {predicate_lo} at both ends")]
    NoThreshold { predicate_lo: bool, predicate_hi: bool },

    /// An operation received an empty collection.
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code for this error: 2 for configuration problems,
    /// 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::InvalidParams(_)
            | Error::Config(_)
            | Error::EmptyInput(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Integration { .. }
            | Error::Solver(_)
            | Error::NonConvergence { .. }
            | Error::ArrivalUndefined { .. }
            | Error::NoThreshold { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
