use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid label {0}, expected -1 or +1")]
    InvalidLabel(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {context}: {detail}")]
    Parse { context: String, detail: String },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn parse(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse { context: context.into(), detail: detail.into() }
    }
}
