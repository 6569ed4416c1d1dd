use thiserror::Error;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("[{module}] domain error: {msg}")]
    Domain { module: &'static str, msg: String },
    #[error("[{module}] convergence failure: {msg}")]
    Convergence { module: &'static str, msg: String },
    #[error("[{module}] certificate failure: {msg}")]
    Certificate { module: &'static str, msg: String },
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub fn domain(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            module,
            msg: msg.into(),
        }
    }
    pub fn convergence(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Convergence {
            module,
            msg: msg.into(),
        }
    }
    pub fn certificate(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Certificate {
            module,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. } | Error::Input(_) => 2,
            Error::Convergence { .. } => 3,
            Error::Certificate { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
