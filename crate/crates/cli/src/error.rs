use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Input { path: PathBuf, detail: String },
    #[error(transparent)]
    Filter(#[from] enkf_etpf::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, detail: impl Into<String>) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            detail: detail.into(),
        }
    }

    /// Process exit status: 2 for configuration and file problems, 3 for
    /// weight degeneracy, 4 for divergence, 1 for other numerical failures.
    pub fn exit_code(&self) -> i32 {
        use enkf_etpf::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Input { .. } => 2,
            CliError::Filter(E::Config(_) | E::Dimension { .. }) => 2,
            CliError::Filter(E::Degeneracy { .. }) => 3,
            CliError::Filter(E::Divergence { .. }) => 4,
            CliError::Filter(_) => 1,
        }
    }
}
