use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("descriptor needs ≥ 10 channels (got {0})")]
    TooFewChannels(usize),

    #[error("unsupported patch size {0} (expected 8, 16 or 32)")]
    UnsupportedPatch(usize),

    #[error("undefined similarity for zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("bank not initialized")]
    BankNotInitialized,

    #[error("reference already initialized")]
    ReferenceAlreadySet,

    #[error("non-monotonic frame index: {got} after {last}")]
    NonMonotonicIndex { last: u64, got: u64 },

    #[error("invalid bank parameters: {0}")]
    InvalidBankParams(String),

    #[error("invalid memory entry: {0}")]
    InvalidEntry(String),

    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),

    #[error("degenerate point prompt: {0}")]
    DegeneratePointPrompt(String),

    #[error("empty active set")]
    EmptyActiveSet,

    #[error("attention overflow")]
    AttentionOverflow,

    #[error("invalid propagation config: {0}")]
    InvalidConfig(String),

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metric input mismatch: {0}")]
    MetricInput(String),

    #[error("zero elapsed time")]
    ZeroElapsed,
}

impl Error {
    pub(crate) fn at_frame(self, frame: u64) -> Self {
        Error::AtFrame {
            frame,
            source: Box::new(self),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
