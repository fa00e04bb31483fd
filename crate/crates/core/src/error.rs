use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Points or slots of incompatible shape.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A derivative was requested beyond what the function supports.
    #[error("capability error: requested derivative order {requested}, available {available}")]
    Capability { requested: usize, available: usize },

    /// The integrand produced a non-finite value.
    #[error("integration error: non-finite integrand value {value} at {point:?}")]
    Integration { point: Vec<f64>, value: f64 },

    /// A theorem hypothesis is violated by the inputs.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The least-squares system was rank deficient or badly scaled.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// One or more exponent or scaling relations failed.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
