use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("unknown unit id `{0}`")]
    UnknownUnit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("missing artifact {}; run the `{stage}` stage first", artifact.display())]
    Prerequisite {
        stage: &'static str,
        artifact: PathBuf,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::UnknownUnit(_)
            | Error::Domain(_)
            | Error::Contract(_)
            | Error::Config(_) => 2,
            Error::Prerequisite { .. } => 3,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) | Error::Runtime(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
