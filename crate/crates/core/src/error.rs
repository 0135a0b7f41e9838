use thiserror::Error;

use crate::domain::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} is {actual}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid placement: {0}")]
    InvalidPlacement(ValidationReport),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(
        "instance too large for exhaustive search: {assignments:e} assignments (limit {limit:e})"
    )]
    TooLarge { assignments: f64, limit: f64 },

    #[error("time cap must be positive")]
    InvalidTimeCap,

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("slot {slot}: {source}")]
    Slot {
        slot: u64,
        #[source]
        source: Box<Error>,
    },
}
