use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fgscan_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    NotConverged(String),

    #[error("scan and enumeration disagree: max relative discrepancy {0:e} exceeds 1e-8")]
    CheckFailed(f64),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fgscan_core::Error as E;
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Core(E::Io { .. }) => 3,
            CliError::ConfigParse { .. } | CliError::Core(E::Parse { .. }) => 4,
            CliError::Validation(_)
            | CliError::Core(E::Validation(_) | E::EmptyDataset | E::DegenerateColumn(_)) => 5,
            CliError::Core(E::WeightUndefined { .. } | E::Overflow { .. } | E::SingularRiskSet { .. }) => 6,
            CliError::NotConverged(_) | CliError::Core(E::NoConvergence(_)) => 7,
            CliError::CheckFailed(_) => 8,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
