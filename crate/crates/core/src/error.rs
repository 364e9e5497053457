use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionLimit { dim: usize, cap: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported chain structure: {0}")]
    UnsupportedStructure(String),

    #[error("no mixing block found within {cap} steps")]
    NoMixingWithinCap { cap: usize },

    #[error("branches {0} and {1} could not be separated; merge them")]
    IndistinguishableBranches(String, String),

    #[error("wrong class kind: {0}")]
    WrongClassKind(String),

    #[error("optimizer budget must be positive")]
    ZeroBudget,

    #[error("inapplicable: {0}")]
    Inapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
