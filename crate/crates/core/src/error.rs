use thiserror::Error;

/// Errors raised by configuration, the PHY chains and the channel stage.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown setting `{0}`")]
    UnknownSetting(String),

    #[error("unknown phase-noise profile `{0}`")]
    UnknownProfile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("curve is not sorted by x")]
    UnsortedCurve,
}

pub type Result<T> = std::result::Result<T, Error>;
