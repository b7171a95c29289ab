use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no target: article `{0}` has no comments within the first week")]
    NoTarget(String),

    #[error("article `{id}` has {have} comments in the window, {need} required")]
    NotEligible {
        id: String,
        have: usize,
        need: usize,
    },

    #[error("cycle in reply structure of article `{0}`")]
    Cycle(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("model used before fit")]
    NotFitted,

    #[error("did not converge after {iterations} iterations: {message}")]
    NonConvergence { iterations: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("provider failure: {0}")]
    Provider(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
