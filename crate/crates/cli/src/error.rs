use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] cgmem::Error),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Config(_) | Self::Checkpoint { .. } => 2,
            Self::Model(e) => match e {
                cgmem::Error::InvalidParameter(_) | cgmem::Error::Assumption { .. } | cgmem::Error::StepBudget(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
