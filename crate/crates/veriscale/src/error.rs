use serde_json::json;

/// Failures surfaced by the command-line tool, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    /// Bad configuration or input documents.
    #[error("{0}")]
    Config(String),
    /// The verifier, executor or a language-model client failed.
    #[error("{0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Config(_) => 2,
            Error::Backend(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::Backend(_) => "backend",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code()})
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        Error::Config(e.to_string())
    }

    pub fn backend(e: impl std::fmt::Display) -> Self {
        Error::Backend(e.to_string())
    }
}

impl From<veriscale_core::pipeline::PipelineError> for Error {
    fn from(e: veriscale_core::pipeline::PipelineError) -> Self {
        if e.is_backend() {
            Error::Backend(e.to_string())
        } else {
            Error::Config(e.to_string())
        }
    }
}

impl From<veriscale_core::backend::BackendError> for Error {
    fn from(e: veriscale_core::backend::BackendError) -> Self {
        Error::Backend(e.to_string())
    }
}
