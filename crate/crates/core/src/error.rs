use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A probability, duration or similar parameter is outside its domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// Shapes, lengths or indices that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Singular covariance, collinear points, too few observations.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("cost returned {value} at theta = {theta:?} after {n_evals} evaluations")]
    NonFiniteCost {
        theta: Vec<f64>,
        value: f64,
        n_evals: usize,
        /// Best finite point seen before the failure, if any.
        best: Option<(Vec<f64>, f64)>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateSample(msg.into())
    }
}
