use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("node id {0} does not fit the 16-bit id field")]
    IdOverflow(u32),
    #[error("relay batch of {0} samples exceeds the 8-bit count field")]
    TooManySamples(usize),
    #[error("frame truncated: needed {needed} bits, have {available}")]
    Truncated { needed: u64, available: u64 },
    #[error("invalid change sign code {0:#04b}")]
    BadSign(u8),
    #[error("{0} unread trailing bits")]
    TrailingBits(u64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {field}: {constraint}")]
    Invalid {
        field: &'static str,
        constraint: String,
    },
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, constraint: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            constraint: constraint.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed metrics file {path}: {reason}")]
    Metrics { path: PathBuf, reason: String },
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
