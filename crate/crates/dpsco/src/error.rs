use dpsco_core::Error as CoreError;

/// Errors surfaced by the harness and the command line.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration and input problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numeric(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}

impl From<CoreError> for HarnessError {
    fn from(e: CoreError) -> Self {
        if e.is_numeric() {
            HarnessError::Numeric(e.to_string())
        } else {
            HarnessError::Config(e.to_string())
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
