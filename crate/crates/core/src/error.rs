use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no valid decomposition: {0}")]
    NoValidDecomposition(String),

    #[error("degenerate fiber in dimension {dim}: fiber with frozen coordinates {frozen:?} {reason}")]
    DegenerateFiber {
        dim: usize,
        frozen: Vec<i64>,
        reason: String,
    },

    #[error("sample coverage gap: no sample at index {index:?}")]
    Coverage { index: Vec<i64> },

    #[error(
        "model order K={k} exceeds the capacity of the row domain: K <= {capacity} \
         (min over p of |Xi| - #fibers in dimension p; N^(d-1)(N-1) on an N^d cube)"
    )]
    CapacityExceeded { k: usize, capacity: usize },

    #[error("model order error: {0}")]
    ModelOrder(String),

    #[error("rank deficient matrix: numerical rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("eigenvalue multiplicity: minimum eigenvalue gap {gap:e} after {attempts} random combinations")]
    Multiplicity { gap: f64, attempts: usize },

    #[error("pairing failure: off-diagonal residuals {residuals:?} exceed tolerance after {attempts} attempts")]
    PairingFailure { residuals: Vec<f64>, attempts: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model generation failed: {0}")]
    Generation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Errors caused by the caller's input rather than by the computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::NoValidDecomposition(_)
                | Error::DegenerateFiber { .. }
                | Error::Coverage { .. }
                | Error::CapacityExceeded { .. }
                | Error::ModelOrder(_)
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}
