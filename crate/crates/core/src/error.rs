use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (shapes, ranges, sizes).
    #[error("usage error: {0}")]
    Usage(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite after damping (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A forward or backward pass produced NaN or infinite values.
    #[error("non-finite values in {0}")]
    NonFinite(String),

    /// Preconditioner used before its factors were estimated, or with mismatched layers.
    #[error("preconditioner state error: {0}")]
    State(String),

    #[error("{file}:{line}: {message}")]
    Load {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Training diverged part-way through a run.
    #[error("training aborted at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
