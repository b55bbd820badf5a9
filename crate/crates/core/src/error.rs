use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("observation {row} is incompatible with every candidate cell")]
    ZeroRow { row: usize },

    #[error("matrix entry ({row}, {col}) is not binary")]
    NonBinary { row: usize, col: usize },

    #[error("problem too large for exhaustive enumeration: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },

    #[error("mixture solver stopped with KKT residual {gap:e} above tolerance {tol:e}")]
    NotConverged { gap: f64, tol: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical kernels rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
