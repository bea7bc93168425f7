use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),
    #[error("invalid geometry spec: {0}")]
    InvalidSpec(String),
    #[error("bond {0} lies on a cycle")]
    NotATreeBond(usize),
    #[error("network contains a loop; only trees can be compactified")]
    NotATree,
    #[error("network is disconnected")]
    Disconnected,
    #[error("dense state of {elems} entries exceeds the ceiling of {limit}")]
    TargetTooLarge { elems: u128, limit: usize },
    #[error("network state has zero norm")]
    DegenerateState,
    #[error("no node with id {0}")]
    NoSuchNode(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input rather than by a computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidSpec(_) | Error::Json(_) | Error::TargetTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
