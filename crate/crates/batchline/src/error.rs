//! Error types shared by every module.

use thiserror::Error;

/// Coarse classification used by callers that must map failures to exit
/// statuses: bad inputs versus checks that the library performed on its own
/// intermediate results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The caller handed us something invalid (parameters, configs, shapes).
    Validation,
    /// An internal numerical or structural self-check failed.
    Consistency,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("row {row} sums to {sum}")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("entry ({row},{col}) = {value} is outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "a {rows}x{cols} matrix ({entries} entries) exceeds the size budget of {budget} entries"
    )]
    SizeBudgetExceeded {
        rows: usize,
        cols: usize,
        entries: u128,
        budget: usize,
    },

    #[error("recoder step undefined for buffer state {state:?} with input {input:?}")]
    StepUndefined {
        state: String,
        input: Option<String>,
    },

    #[error(
        "recoder {action} at step {step} violates the latency protocol (latency {latency}, blocklength {blocklength})"
    )]
    EmissionProtocol {
        action: &'static str,
        step: usize,
        latency: usize,
        blocklength: usize,
    },

    #[error("recoder is randomized where a deterministic one is required: {0}")]
    NotDeterministic(String),

    #[error("degenerate decomposition: {0}")]
    DegenerateDecomposition(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("group size {group} does not divide network length {length}")]
    GroupSize { group: usize, length: usize },

    #[error("channel admits zero-error signalling (pairwise overlap floor is 0); no collapse witness exists")]
    ZeroErrorPositive,

    #[error("collapse witness produced {got} outputs, above the guaranteed ceiling {limit}")]
    WitnessCardinality { got: usize, limit: usize },

    #[error("collapse chain still had {survivors} candidate words after {hops} hops")]
    CollapseNotReached { hops: usize, survivors: usize },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InternalConsistency(_)
            | Error::WitnessCardinality { .. }
            | Error::CollapseNotReached { .. } => ErrorCategory::Consistency,
            _ => ErrorCategory::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
