//! Error type shared by every module in the crate.
//!
//! Display messages are single-line so callers can emit them verbatim in
//! machine-parseable diagnostics. [`Error::class`] splits errors into the
//! validation / I/O classes the CLI maps onto exit codes.

use std::path::PathBuf;

/// Coarse failure class, used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Input data or parameters violate a documented contract.
    Validation,
    /// The underlying filesystem operation failed.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: malformed record: {source}", path.display())]
    MalformedLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}:{line}: duplicate id {id:?}", path.display())]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{}:{line}: document {id:?} has an empty response", path.display())]
    EmptyResponse {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{}:{line}: record has an empty id", path.display())]
    EmptyId { path: PathBuf, line: usize },

    #[error("record {id:?}: nll_base has {base_len} entries but nll_ref has {ref_len}")]
    LossLengthMismatch {
        id: String,
        base_len: usize,
        ref_len: usize,
    },

    #[error("record {id:?}: {field} must be nonempty with finite, nonnegative entries")]
    InvalidLossArray { id: String, field: &'static str },

    #[error("record {id:?} in {side} input has no counterpart (strict mode)")]
    UnmatchedId { id: String, side: &'static str },

    #[error("preference example {id:?}: {reason}")]
    InvalidPreference { id: String, reason: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },

    #[error("loss_base must be strictly positive for the normalized score (got {value})")]
    DegenerateBaseLoss { value: f64 },

    #[error("correlation inputs have different lengths ({left} vs {right})")]
    CorrelationLengthMismatch { left: usize, right: usize },

    #[error("correlation needs at least 2 samples (got {got})")]
    TooFewSamples { got: usize },

    #[error("undefined (constant statistic): {name} has zero variance")]
    ZeroVariance { name: String },

    #[error("correlation input {name} contains a non-finite value")]
    NonFiniteInput { name: String },

    #[error("id {id:?} collides across corpora {first:?} and {second:?}")]
    IdCollision {
        id: String,
        first: String,
        second: String,
    },

    #[error("model file {}: {reason}", path.display())]
    ModelFormat { path: PathBuf, reason: String },
}

impl Error {
    /// Failure class for exit-code mapping. Everything except raw I/O
    /// failures counts as validation.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
