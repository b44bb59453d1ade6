use std::path::PathBuf;

/// Process exit codes: 0 success, 2 I/O or parse trouble, 3 shape mismatch,
/// 4 underdetermined estimation. Nothing else is ever returned.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{detail}")]
    Invalid { detail: String },
    #[error("{detail}")]
    Shape { detail: String },
    #[error("{detail}")]
    Estimation { detail: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Invalid { .. } => 2,
            CliError::Shape { .. } => 3,
            CliError::Estimation { .. } => 4,
        }
    }
}
