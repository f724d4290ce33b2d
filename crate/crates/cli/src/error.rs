use secrecy_effcap::Error as ModelError;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Some points of a sweep failed; outputs were still written.
    #[error("solver failed at {0}")]
    PartialFailure(String),
    #[error("queue is unstable: {0}")]
    Unstable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Model(e) => match e {
                ModelError::InvalidParameter { .. }
                | ModelError::NegativePower { .. }
                | ModelError::ConfidentialPowerOutsideSecrecyRegion { .. }
                | ModelError::UnsupportedDistribution(_)
                | ModelError::NonPositiveTheta(_)
                | ModelError::InstanceTooLarge(_) => 2,
                _ => 3,
            },
            CliError::PartialFailure(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
