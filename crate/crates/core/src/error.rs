use thiserror::Error;

/// Errors produced by the model, estimators and oracle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    InvalidMode { index: usize, n_modes: usize },

    #[error("modes of a two-mode operation must differ (got {0} twice)")]
    SameMode(usize),

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator word of length {len} exceeds the supported maximum {max}")]
    WordTooLong { len: usize, max: usize },

    #[error("moment order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("covariance matrix is not a physical state: {0}")]
    Unphysical(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("estimator {0} has a vanishing mixed derivative and cannot estimate the phase covariance")]
    DegenerateEstimator(&'static str),

    #[error("estimator {kind} expects psi = {expected}, got {actual} (set allow_phase_override to proceed)")]
    PhaseMismatch {
        kind: &'static str,
        expected: f64,
        actual: f64,
    },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("step underflow: {0}")]
    StepUnderflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Fock cutoff {cutoff} insufficient: {reason}")]
    Cutoff { cutoff: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: f64::INFINITY,
        })
    }
}
