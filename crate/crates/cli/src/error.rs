use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Estimator(#[from] sepcoef::Error),
}

impl CliError {
    /// 3 when the data defeat the estimator, 2 for every input, output or
    /// usage problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Estimator(
                sepcoef::Error::InvalidParameter(_)
                | sepcoef::Error::SubsetBudgetExceeded { .. }
                | sepcoef::Error::ColumnOutOfRange { .. },
            ) => 2,
            CliError::Estimator(_) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
