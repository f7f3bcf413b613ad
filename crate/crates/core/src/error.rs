use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("generator cannot satisfy the request: {0}")]
    InfeasibleGenerator(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("lp solver failure: {0}")]
    SolverFailure(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("cutting-plane budget exhausted after {cuts} cuts")]
    Budget { cuts: usize },
    #[error("instance too large for exhaustive search: {0}")]
    Guard(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
