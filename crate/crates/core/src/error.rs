use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectra have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),

    #[error("no spectral peak: all bin powers are zero")]
    NoPeak,

    #[error("empty input")]
    EmptyInput,

    #[error("region too short: need {needed} samples, got {got}")]
    RegionTooShort { needed: usize, got: usize },

    #[error("multiframe ring incomplete: {have} of {need} windows")]
    IncompleteRing { have: usize, need: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
