use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: pshlab::Error,
    },

    /// A valid config that does not fit the requested command.
    #[error("{0}")]
    Usage(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 config or usage, 2 numerical, 3 verification. I/O problems count as numerical
    /// failures of the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 1,
            CliError::Numerical { .. } | CliError::Io(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// Tags a library error with the pipeline stage that raised it.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for pshlab::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { stage, source })
    }
}
