use thiserror::Error;

/// Errors raised by the modelling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("vocabulary pruning removed every keyword")]
    EmptyVocabulary,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid event sequence: {0}")]
    InvalidEvents(String),
    #[error("non-positive intensity at event {index}")]
    NonPositiveIntensity { index: usize },
    #[error("process is unstable: branching ratio {ratio} >= 1")]
    Unstable { ratio: f64 },
    #[error("simulation exceeded the event cap of {cap}")]
    EventCapExceeded { cap: usize },
    #[error("need at least two non-empty clusters, found {found}")]
    TooFewClusters { found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
