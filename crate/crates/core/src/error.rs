use thiserror::Error;

/// Errors produced by the screening pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A stream value or weight that the structures cannot accept
    /// (NaN values, non-positive weights, malformed sparse entries).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// An argument outside an operation's domain (prune target < 2,
    /// rank query out of range, top-k larger than the feature count).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Inconsistent screener configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A score or ratio that is undefined for the observed data,
    /// e.g. criteria evaluated on a single class or an empty table.
    #[error("degenerate score: {0}")]
    Degenerate(String),

    /// Scoring requested before any sample was observed.
    #[error("no samples observed")]
    NoSamples,

    /// A malformed engine snapshot.
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
