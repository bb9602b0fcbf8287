use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (non-finite entries, bad ranges, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Shapes of two operands do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input is structurally degenerate for the requested operation
    /// (zero matrix, all-zero spectrum, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A file did not match the expected binary format.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Requested variant exists in the API but is intentionally not implemented.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// I/O failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 1 for I/O or format trouble, 2 for
    /// validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Io { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
