use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical degeneracy: non-positive pivot at index {pivot} ({value:e})")]
    NonPositivePivot { pivot: usize, value: f64 },

    #[error("numerical degeneracy: posterior variance {0:e} is negative beyond round-off")]
    NegativeVariance(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ordering error: channel {channel} got round {got} after round {last}")]
    Ordering { channel: u16, last: u64, got: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: trace is missing round {round}, channel {channel}")]
    Incomplete {
        path: PathBuf,
        round: u64,
        channel: u16,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by malformed input files rather than bad settings.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Incomplete { .. })
    }
}
