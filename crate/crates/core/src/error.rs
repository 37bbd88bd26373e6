use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("label or index is outside the weak label space: {0}")]
    OutOfSpace(String),

    #[error("invalid class count {k}: at least 2 classes are required (and at most {max})")]
    InvalidClassCount { k: usize, max: usize },

    #[error("invalid space parameter: {0}")]
    InvalidSpace(String),

    #[error("space cardinality overflows the representable range")]
    Overflow,

    #[error("superset membership requires the true label")]
    MissingTrueLabel,

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: String, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix spaces differ: {0}")]
    SpaceMismatch(String),

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("column {column} is not stochastic: sum = {sum}, deviation {deviation:e} (worst column)")]
    NotStochastic {
        column: usize,
        sum: f64,
        deviation: f64,
    },

    #[error("entry ({row}, {col}) = {value} lies outside the admissible support: {reason}")]
    SupportViolation {
        row: usize,
        col: usize,
        value: f64,
        reason: String,
    },

    #[error("noise classification needs a square multiclass matrix")]
    NotSquare,

    #[error("row {row}: no region matches")]
    UnmatchedRegion { row: usize },

    #[error("row {row}: label {label} is out of range for {k} classes")]
    LabelOutOfRange { row: usize, label: String, k: usize },

    #[error("row {row}: multi-label targets are not supported by this operation")]
    MultiLabel { row: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("bag {bag} is empty")]
    EmptyBag { bag: usize },

    #[error("invalid threshold r = {0}; r must be at least 1")]
    InvalidThreshold(usize),

    #[error("class {class} has no examples and smoothing is 0")]
    EmptyColumn { class: usize },

    #[error("weak label has zero probability under the matrix and prior")]
    ZeroEvidence,

    #[error("matrix is rank deficient: numerical rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("{path}:{line}:{column}: {message}")]
    File {
        path: String,
        line: u64,
        column: u64,
        message: String,
    },

    #[error("incompatible dimensions: {first} with {second}")]
    IncompatibleDimensions { first: String, second: String },

    #[error("bag {bag}: {source}")]
    InBag {
        bag: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
