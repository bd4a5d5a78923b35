use thiserror::Error;

/// Errors produced by the simulation and criteria routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("attachment weight at degree {degree} is not strictly positive and finite: {value}")]
    NonPositiveWeight { degree: u64, value: f64 },

    #[error("random attachment spec requires a random source")]
    MissingRng,

    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),

    #[error("degree {degree} lies beyond the attachment table (tail rule is `error`)")]
    TableExhausted { degree: u64 },

    #[error("moment diverges: lambda = {lambda} is not below the weight {weight} at degree {degree}")]
    DivergentMoment { degree: u64, lambda: f64, weight: f64 },

    #[error("weight must be finite and non-negative, got {0}")]
    InvalidWeight(f64),

    #[error("cannot sample from a structure with zero total weight")]
    EmptyStructure,

    #[error("event cap of {cap} exceeded")]
    CapExceeded { cap: u64 },

    #[error("population cap of {cap} reached at time {time} before horizon {horizon}; the process may be explosive")]
    ExplosionSuspected { cap: usize, time: f64, horizon: f64 },

    #[error("expected killed size is not certified finite: {0}")]
    DivergentExpectation(String),

    #[error("no witness found: {0}")]
    NotFound(String),

    #[error("declared envelope violated at degree {degree}: {detail}")]
    EnvelopeViolated { degree: u64, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse spec `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

impl Error {
    /// Whether the error reports a failed numeric precondition (as opposed
    /// to a malformed configuration).
    pub fn is_numeric_precondition(&self) -> bool {
        matches!(
            self,
            Error::DivergentMoment { .. }
                | Error::DivergentExpectation(_)
                | Error::NotFound(_)
                | Error::ExplosionSuspected { .. }
                | Error::CapExceeded { .. }
                | Error::EnvelopeViolated { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
