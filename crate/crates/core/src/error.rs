use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Error categories; the CLI maps each to a distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// A configured size cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// A finite window is too small to evaluate the requested quantity.
    #[error("window exhausted: {0}")]
    Window(String),

    /// A checked identity or structural invariant failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Error {
        Error::Input(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Error {
        Error::Resource(msg.into())
    }

    pub(crate) fn window(msg: impl Into<String>) -> Error {
        Error::Window(msg.into())
    }

    pub(crate) fn verification(msg: impl Into<String>) -> Error {
        Error::Verification(msg.into())
    }
}
