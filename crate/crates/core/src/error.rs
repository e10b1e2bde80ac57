use thiserror::Error;

pub type Result<T> = std::result::Result<T, FluxError>;

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no avoided crossing found in flux window ({lo:.6}, {hi:.6}) rad")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("phase undefined: |<{label}|U|{label}>| = {magnitude:e}")]
    UndefinedPhase { label: &'static str, magnitude: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl FluxError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FluxError::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        FluxError::Numerical(msg.into())
    }
}
