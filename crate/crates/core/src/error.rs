use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid device: {0}")]
    InvalidDevice(String),
    #[error("operators do not commute (norm {0:e})")]
    NotCommuting(f64),
    #[error("integration diverged at t = {time} ns (drift {drift:e}); reduce dt")]
    IntegrationDiverged { time: f64, drift: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("checkpoint grids differ between runs")]
    MismatchedCheckpoints,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.into(), message: message.into() }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedSpace(_) => "unsupported_space",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidDevice(_) => "invalid_device",
            Error::NotCommuting(_) => "not_commuting",
            Error::IntegrationDiverged { .. } => "integration_diverged",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::InvalidConfig { .. } => "invalid_config",
            Error::MismatchedCheckpoints => "mismatched_checkpoints",
            Error::Io(_) => "io",
            Error::Serde(_) => "serialization",
        }
    }
}
