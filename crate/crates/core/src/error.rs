use thiserror::Error;

/// Errors shared by the library modules.
#[derive(Debug, Error)]
pub enum ShbError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample index {index} out of range for {count} samples")]
    SampleOutOfRange { index: usize, count: usize },

    #[error("iterates diverged at iteration {at}")]
    Diverged { at: usize },

    #[error("constant not estimable: {0}")]
    NotEstimable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("insufficient seeds: need at least {need}, got {got}")]
    InsufficientSeeds { need: usize, got: usize },
}

impl ShbError {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ShbError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        ShbError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ShbError>;
