//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: value is not finite")]
    NonFinite { context: &'static str },

    #[error("vehicles are co-located, bearing undefined")]
    CoincidentVehicles,

    #[error("{context}: matrix is not symmetric positive (semi-)definite")]
    NotPositiveDefinite { context: &'static str },

    #[error("{context}: matrix is singular")]
    Singular { context: &'static str },

    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("no vehicles left after exclusion")]
    EmptySelection,

    #[error("no edge between vehicles {i} and {j}")]
    MissingEdge { i: usize, j: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("oracle supports at most {max} vehicles, scenario has {actual}")]
    OracleTooLarge { max: usize, actual: usize },

    #[error("oracle unreliable: effective sample size {ess:.1} below {min}")]
    UnreliableOracle { ess: f64, min: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scenario file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}
