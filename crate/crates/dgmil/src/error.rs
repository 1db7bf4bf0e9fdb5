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

    /// File is not a recognizable feature file (bad magic, bad version,
    /// malformed CSV header, ...).
    #[error("{path}: unrecognized feature file: {detail}")]
    Format { path: PathBuf, detail: String },

    /// File carried the right magic but the payload ends or breaks mid-record.
    #[error("{path}: corrupt feature file at byte {offset}: {detail}")]
    Corrupt {
        path: PathBuf,
        offset: usize,
        detail: String,
    },

    /// Dataset-level validation failure (also used to reject writes of
    /// invalid datasets).
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("k-means asked for {m} clusters but only {n} points are available")]
    TooFewPoints { n: usize, m: usize },

    #[error("k-means asked for {m} clusters but only {distinct} distinct points exist")]
    TooFewDistinct { distinct: usize, m: usize },

    /// Invalid configuration or flag value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input too degenerate for the requested statistic (single-class labels,
    /// collapsed score distribution, ...).
    #[error("{0}")]
    Degenerate(String),

    #[error("head training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    /// A refinement sub-operation failed; carries the outer round index.
    #[error("refinement round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_round(self, round: usize) -> Error {
        Error::Round {
            round,
            source: Box::new(self),
        }
    }
}
