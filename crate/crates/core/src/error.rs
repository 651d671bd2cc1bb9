use thiserror::Error;

/// Errors raised by the kinetic laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticError {
    #[error("DimensionError: {0}")]
    Dimension(String),
    #[error("SymmetryError: {0}")]
    Symmetry(String),
    #[error("CapacityError: {0}")]
    Capacity(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("NormalizationError: {0}")]
    Normalization(String),
    #[error("InsufficientDataError: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, KineticError>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(KineticError::Dimension(msg.into()))
}
