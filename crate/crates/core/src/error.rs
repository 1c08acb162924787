use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("covariate column '{0}' is constant and cannot be standardized")]
    DegenerateColumn(String),

    #[error("censoring weight undefined: G({time}) is zero")]
    WeightUndefined { time: f64 },

    #[error("non-finite linear predictor (max |eta| = {max_abs_eta}); center or rescale covariates")]
    Overflow { max_abs_eta: f64 },

    #[error("risk-set denominator for the event at time {time} is not positive")]
    SingularRiskSet { time: f64 },

    #[error("no fit on the tuning grid converged ({0} grid points tried)")]
    NoConvergence(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
