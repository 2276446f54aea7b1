use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("attribute `{attribute}` has a single category; every attribute needs at least 2")]
    SingleCategory { attribute: String },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("level {k} is out of range for depth {depth}")]
    LevelOutOfRange { k: usize, depth: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("discrete Gaussian sampler exceeded {0} rejection iterations; the random source is likely broken")]
    SamplerExhausted(u64),

    #[error("incomplete tree: {levels} of {expected} levels present")]
    IncompleteTree { levels: usize, expected: usize },

    #[error("schema mismatch between tables")]
    SchemaMismatch,

    #[error("universe of {size} cells exceeds the dense limit of {limit}")]
    UniverseTooLarge { size: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
