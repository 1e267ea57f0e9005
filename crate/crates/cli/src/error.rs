use steklov_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Resolution(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resolution(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Resolution(_) => "resolution",
            CliError::Invariant(_) => "invariant",
            CliError::Io(_) => "io",
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Domain(_) | CoreError::Positivity(_) | CoreError::Symmetry(_) => CliError::Config(msg),
            CoreError::Resolution(_) => CliError::Resolution(msg),
            CoreError::Io(_) => CliError::Io(msg),
            CoreError::Structure(_) | CoreError::Infeasible(_) | CoreError::Degenerate(_) | CoreError::Stale(_) => {
                CliError::Invariant(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
