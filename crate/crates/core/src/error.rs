use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error("singular block: pivot {index} has magnitude {magnitude:e}")]
    SingularBlock { index: usize, magnitude: f64 },

    #[error("singular pivot in supernode {supernode} (column {column})")]
    SingularSupernode { supernode: usize, column: usize },

    #[error("harmonic {harmonic}: {source}")]
    Harmonic {
        harmonic: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("GMRES breakdown with relative residual {0:e} above tolerance")]
    Breakdown(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by a numerically singular pivot, possibly
    /// wrapped in a harmonic label.
    pub fn is_singular(&self) -> bool {
        match self {
            Error::SingularBlock { .. } | Error::SingularSupernode { .. } => true,
            Error::Harmonic { source, .. } => source.is_singular(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
