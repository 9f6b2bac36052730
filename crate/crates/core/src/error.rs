use crate::lp::{LpError, ParseError};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),
    /// A statistical fit could not be completed.
    #[error("fit error: {0}")]
    Fit(String),
    /// Network topology problem (disconnected graph, singular susceptance matrix).
    #[error("topology error: {0}")]
    Topology(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP text: {0}")]
    LpText(#[from] ParseError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
