use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed key {key:?}: {reason}")]
    MalformedKey { key: String, reason: &'static str },

    #[error("no object pool matches key {0:?}")]
    NoSuchPool(String),

    #[error("object pool {0:?} is already registered")]
    DuplicatePool(String),

    #[error("object pool {new:?} overlaps registered pool {existing:?}")]
    OverlappingPool { new: String, existing: String },

    #[error("pool {pool:?} needs {needed} nodes but the cluster has {available}")]
    InsufficientNodes {
        pool: String,
        needed: usize,
        available: usize,
    },

    #[error("bad affinity regex {regex:?}: {message}")]
    BadRegex { regex: String, message: String },

    #[error("object {0:?} is missing")]
    ObjectMissing(String),

    #[error("a handler is already registered for prefix {0:?}")]
    DuplicatePrefix(String),

    #[error("deadlock: {suspended} task(s) suspended with no pending events (first waits on {first_key:?})")]
    DeadlockDetected { suspended: usize, first_key: String },

    #[error("bad config: {0}")]
    BadConfig(String),

    #[error("experiments do not share a trace: {0}")]
    TraceMismatch(String),

    #[error("handler {handler} failed on {key:?}: {message}")]
    Handler {
        handler: String,
        key: String,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
