use thiserror::Error;

use netform_core::Error as CoreError;

/// Process exit code for a model or configuration that fails validation.
pub const EXIT_VALIDATION: i32 = 2;
/// Process exit code for I/O and numerical failures.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The model fails a check the subcommand depends on; the message
    /// carries the witness.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => EXIT_VALIDATION,
            Self::Io(_) | Self::Internal(_) => EXIT_INTERNAL,
            Self::Core(e) => match e {
                CoreError::SolverFailure(_) | CoreError::QuadratureFailure { .. } => EXIT_INTERNAL,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
