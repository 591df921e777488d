use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {shape:?}")]
    NotSquare {
        op: &'static str,
        shape: (usize, usize),
    },

    #[error("singular matrix (pivot ratio estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("singular channel: {0}")]
    SingularChannel(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("approximation regime violated: Nakagami shape m = {m:.4} < 1")]
    ApproximationRegime { m: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pilot overhead exceeds block: T_pilot = {pilot} >= CT = {coherence}")]
    PilotOverhead { pilot: u64, coherence: u64 },

    #[error("Jensen bound undefined for N == M (N = M = {0})")]
    JensenUndefined(usize),

    #[error("starved estimate: {0}")]
    StarvedEstimate(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
