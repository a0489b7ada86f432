use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (layer sizes, sample counts, optimizer settings...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("point ({x}, {y}) lies outside the computational domain")]
    OutsideDomain { x: f64, y: f64 },

    /// Point in the gap opened between separated subdomains.
    #[error("invalid region: point ({x}, {y}) lies in a gap between separated subdomains")]
    InvalidRegion { x: f64, y: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite {what} during {phase} at iteration {iteration}")]
    NonFinite {
        phase: &'static str,
        iteration: usize,
        what: &'static str,
    },

    #[error("non-finite {term} loss contribution at record {index}")]
    NonFiniteRecord { term: &'static str, index: usize },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
