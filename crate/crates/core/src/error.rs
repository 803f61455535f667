use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input supplied by the caller.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("variable count mismatch: expected {expected}, found {found}")]
    VariableMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    /// A self-check on representation-theoretic data failed.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("section polytope unbounded")]
    Unbounded,

    #[error("maximal unipotent expansion point absent")]
    NoInteriorPoint,

    #[error("outside expansion polydisc")]
    OutsidePolydisc,

    #[error("insufficient samples or representation-theory inconsistency: {0}")]
    SampleRank(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
