use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data failed validation.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("model fitting failed: {0}")]
    Fit(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The inference service answered with something outside the wire contract.
    #[error("protocol error: {message} (payload: {excerpt})")]
    Protocol { message: String, excerpt: String },

    /// The inference service could not be reached after all retries.
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn protocol(message: impl Into<String>, payload: &str) -> Self {
        const MAX: usize = 200;
        let excerpt = match payload.char_indices().nth(MAX) {
            Some((idx, _)) => format!("{}...", &payload[..idx]),
            None => payload.to_string(),
        };
        Error::Protocol {
            message: message.into(),
            excerpt,
        }
    }

    /// Process exit code for this error: 1 validation, 2 I/O, 3 protocol.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Protocol { .. } | Error::Transport { .. } => 3,
            _ => 1,
        }
    }
}
