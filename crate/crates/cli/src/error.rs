use echograin_core::calibrate::CalError;
use echograin_core::convert::{ConvertError, SourceError};
use echograin_core::echogram::EchogramError;
use echograin_core::metrics::MetricsError;
use echograin_core::process::ProcessError;
use echograin_core::store::StoreError;
use thiserror::Error;

/// Failures grouped by exit status: 1 usage, 2 bad input, 3 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ConvertError> for CliError {
    fn from(e: ConvertError) -> Self {
        match e {
            ConvertError::Read { .. } | ConvertError::Source(_) => CliError::Io(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CalError> for CliError {
    fn from(e: CalError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ProcessError> for CliError {
    fn from(e: ProcessError) -> Self {
        match e {
            ProcessError::InvalidParams(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<EchogramError> for CliError {
    fn from(e: EchogramError) -> Self {
        match e {
            EchogramError::InvalidRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
