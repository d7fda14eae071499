use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("u-field component {index} is nonpositive ({value:e})")]
    NonPositiveUField { index: usize, value: f64 },

    #[error("vertex {0} has no weight to the remaining vertices")]
    IsolatedVertex(usize),

    #[error("vertex {0} is absorbing")]
    Absorbing(usize),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("level {level} out of range: {reason}")]
    Level { level: u32, reason: String },

    #[error("edge or vertex not found: {0}")]
    NotFound(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("enumeration guard exceeded: {0}")]
    Guard(String),

    #[error("inconsistent flow state: {0}")]
    InconsistentFlow(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
