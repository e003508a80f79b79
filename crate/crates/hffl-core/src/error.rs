//! Crate-wide error type.

use thiserror::Error;

/// Shorthand for results produced by this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or invalid argument combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A data quota cannot be satisfied by the available dataset.
    #[error("insufficient data: required {required} examples, available {available}")]
    Capacity { required: usize, available: usize },

    /// A binary file does not match the expected layout. `field` names the
    /// offending part of the file.
    #[error("{path}: bad {field}: {detail}")]
    Format {
        path: String,
        field: &'static str,
        detail: String,
    },

    /// Dimension mismatch between parameters and data.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A batch of examples was empty where at least one example is required.
    #[error("empty batch")]
    EmptyBatch,

    /// Parameter vectors cannot be aggregated together.
    #[error("aggregation error: {0}")]
    Aggregation(String),

    /// A federation participant is unusable (for example, holds no data).
    #[error("participant error: {0}")]
    Participant(String),

    /// An agent cannot be promoted to the requested level.
    #[error("promotion error: {0}")]
    Promotion(String),

    /// A numeric argument is outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exact coalition enumeration would be too expensive.
    #[error(
        "coalition game with {players} players needs 2^{players} evaluations \
         (max {max} players); use the permutation-sampling estimator instead"
    )]
    TooManyPlayers { players: usize, max: usize },

    /// The caller combined operations or records that do not belong together.
    #[error("usage error: {0}")]
    Usage(String),

    /// A federation round failed; carries the failing round index.
    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    /// A persisted run record could not be read or written.
    #[error("record error: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is the caller's fault (bad config/arguments)
    /// rather than a runtime failure. The CLI maps this to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Capacity { .. }
                | Error::Domain(_)
                | Error::Usage(_)
                | Error::TooManyPlayers { .. }
        )
    }
}
