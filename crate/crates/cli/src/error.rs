use thiserror::Error;

/// Failures of a CLI run, each mapped to its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<mqcavity_core::Error> for CliError {
    fn from(e: mqcavity_core::Error) -> Self {
        match e {
            // every parameter check precedes the first solve, so it is a config problem
            mqcavity_core::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}
