use hotspot_pricing::PricingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("validation failed: {failed} of {total} comparisons beyond 3 standard errors")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    /// 1 for a failed validation, 2 for bad input or a pricing error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
