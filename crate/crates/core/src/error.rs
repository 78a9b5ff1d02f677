use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed input: {reason}")]
    MalformedInput { line: usize, reason: String },

    #[error("line {line}: invalid hyperedge: {reason}")]
    InvalidHyperedge { line: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("requested rank {requested} exceeds available dimension {available}")]
    RankTooLarge { requested: usize, available: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dense tensor with {n}^{m} entries exceeds the size guard")]
    SizeGuard { n: usize, m: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty network: {0}")]
    EmptyNetwork(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
