use thiserror::Error;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    /// An analytic invariant did not hold.
    #[error("contract failure: {0}")]
    Contract(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Contract(_) => 1,
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Integration(_) => 3,
        }
    }
}

impl From<psnads::Error> for RunError {
    fn from(e: psnads::Error) -> Self {
        use psnads::Error as E;
        match e {
            E::IntegrationFailure { .. } | E::UndefinedPhase { .. } => RunError::Integration(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
