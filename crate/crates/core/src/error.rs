use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure reported by a pluggable backend (seq2seq model, embedder, NLI
/// classifier, OIE system).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

impl BackendError {
    pub fn new(msg: impl Into<String>) -> Self {
        BackendError(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or missing inputs; detected before any work starts.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Format(#[from] crate::seqio::FormatError),

    #[error("backend error: {0}")]
    Backend(#[from] BackendError),

    #[error("context {context_id}: extraction failed: {source}")]
    Extraction {
        context_id: String,
        #[source]
        source: BackendError,
    },

    #[error("invalid span [{start}, {end}) for a text of {len} characters")]
    Span { start: usize, end: usize, len: usize },

    #[error("insufficient units: {found} grouping units, at least 3 are required")]
    InsufficientUnits { found: usize },

    #[error("non-finite loss at step {step} (examples {batch:?})")]
    NonFiniteLoss { step: usize, batch: Vec<usize> },

    #[error("need ≥2 clusters, got {0}")]
    TooFewClusters(usize),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Errors that stem from bad user input rather than a runtime fault.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Format(_) | Error::Span { .. } | Error::InsufficientUnits { .. }
        )
    }
}
