use momentforge::evaluate::EvaluateError;
use momentforge::ingest::IngestError;
use momentforge::localize::LocalizeError;
use momentforge::reformulate::{ClientError, ReformulateError};

/// Failures mapped onto the process exit code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration. Exit code 2.
    Input(String),
    /// The chat endpoint could not be reached or answered unusably. Exit code 3.
    Transport(String),
    /// Anything else, e.g. an unwritable output path. Exit code 1.
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Transport(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Transport(m) | CliError::Other(m) => m,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LocalizeError> for CliError {
    fn from(e: LocalizeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EvaluateError> for CliError {
    fn from(e: EvaluateError) -> Self {
        match e {
            EvaluateError::Io(_) => CliError::Other(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ReformulateError> for CliError {
    fn from(e: ReformulateError) -> Self {
        match e {
            ReformulateError::Client(ClientError::Transport { .. } | ClientError::EmptyCompletion) => {
                CliError::Transport(e.to_string())
            }
            ReformulateError::Cache { .. } => CliError::Other(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Other(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}
