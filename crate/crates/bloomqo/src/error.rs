use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate table name `{0}`")]
    DuplicateName(String),
    #[error("invalid statistics for `{table}.{column}`: {reason}")]
    InvalidStats {
        table: String,
        column: String,
        reason: String,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("incompatible bloom filter parameters: {0}")]
    IncompatibleParams(String),
    #[error("bloom filter is sealed")]
    SealedFilter,
    #[error("invalid partition count {0}")]
    InvalidPartitions(usize),
    #[error("plan contains an unresolved bloom filter (id {0})")]
    UnresolvedBloomFilter(u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing table `{0}` in loaded data")]
    MissingTable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("no plan produced: {0}")]
    NoPlan(String),
    #[error("plan validation failed: {0}")]
    InvalidPlan(String),
    #[error("fixture `{0}` not found")]
    UnknownFixture(String),
    #[error("fixture assertion failed: {0}")]
    AssertionFailed(String),
    #[error("inconsistent generator spec: {0}")]
    InconsistentSpec(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
