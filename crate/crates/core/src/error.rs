//! Crate-wide error type and result alias.

use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes are incompatible (non-square matrix, length mismatch, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A matrix that must be Hermitian is not, within the working tolerance.
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian {
        max_asymmetry: f64,
        tolerance: f64,
    },

    /// Power iteration did not reach the residual tolerance.
    #[error("no convergence after {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    /// A numeric or structural argument is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configuration file, key or value is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Text or binary input could not be decoded.
    #[error("parse error: {0}")]
    Parse(String),

    /// File I/O failed.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class used by the CLI: configuration problems are
    /// usage errors (2), everything else is a runtime failure (3).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
