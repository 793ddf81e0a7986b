use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("field `{field}`: {source}")]
    Field {
        field: &'static str,
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] flatspace::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
