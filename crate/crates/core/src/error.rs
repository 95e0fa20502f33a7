use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A Cholesky pivot fell below the negative tolerance; usually a diverged covariance.
    #[error("matrix is not positive semidefinite (pivot {pivot:e} at index {index})")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("innovation covariance is singular (condition number {0:e})")]
    SingularInnovation(f64),

    #[error("estimate diverged")]
    Diverged,

    #[error("unsupported quadrature order {0} (supported: 3, 5)")]
    UnsupportedOrder(usize),

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
