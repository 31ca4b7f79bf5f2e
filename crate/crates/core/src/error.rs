use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: out-of-range sizes, unknown names, bad hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs that do not fit the operation: dimension mismatch, bad labels, empty sets.
    #[error("data error: {0}")]
    Data(String),

    /// Malformed circuits or out-of-range wires/parameter slots.
    #[error("circuit error: {0}")]
    Circuit(String),

    /// A gate carries a trainable angle the parameter-shift rule cannot differentiate.
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    /// Training data that cannot produce a classifier (e.g. a single class).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{location}: {message}")]
    Ingestion { location: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn circuit(msg: impl Into<String>) -> Self {
        Error::Circuit(msg.into())
    }

    pub(crate) fn ingestion(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Ingestion {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True when the error stems from user input (configuration or data)
    /// rather than an internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}
