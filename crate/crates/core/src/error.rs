use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("density {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("invalid end states ({lo}, {hi}): {reason}")]
    InvalidEndStates { lo: f64, hi: f64, reason: String },

    #[error("non-degenerate: no finite wavefront on either side")]
    NonDegenerate,

    #[error("road {road} has zero speed; speed ratios are undefined")]
    ZeroSpeed { road: usize },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("no convergence: {0}")]
    Convergence(String),
}
