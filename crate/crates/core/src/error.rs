use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Sorting networks only accept power-of-two lengths.
    #[error("length {0} is not a power of two")]
    InvalidLength(usize),

    #[error("client budget exceeded: holding {held}, requested {requested}, limit {limit}")]
    BudgetExceeded {
        held: usize,
        requested: usize,
        limit: usize,
    },

    /// A MergeSplit output side received more than `Z` real elements.
    /// `bucket` indexes the overflowing output bucket at `level + 1`.
    #[error("bucket overflow at level {level}, output bucket {bucket}")]
    Overflow { level: usize, bucket: usize },

    #[error("label width {width} too small for bucket size {z} (need 2^w >= Z^2)")]
    LabelWidthTooSmall { width: u32, z: usize },

    #[error("malformed trace line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("malformed input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_overflow(&self) -> bool {
        matches!(self, Error::Overflow { .. })
    }
}
