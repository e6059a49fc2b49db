use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {value} is outside the {width}-bit domain")]
    DomainMismatch { value: String, width: u32 },

    #[error("prefix of length {len} exceeds domain width {width}")]
    PrefixLength { len: u32, width: u32 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("input has {actual} rows but the utility guarantee needs at least {required}")]
    Sizing { required: u64, actual: u64 },

    #[error("value exceeds the {budget}-bit big-integer budget")]
    Overflow { budget: u64 },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("protocol failure: {0}")]
    Protocol(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {value}")))
    }
}

pub(crate) fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in (0, 1), got {value}")))
    }
}
