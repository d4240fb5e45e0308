use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id 0 is not a valid id")]
    ZeroId,
    #[error("duplicate node id {0}")]
    DuplicateId(u64),
    #[error("instance has no nodes")]
    EmptyInstance,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid master key: {0}")]
    InvalidKey(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("node {to} is not reachable from node {from}")]
    Unreachable { from: u64, to: u64 },
    #[error("probability {0} is outside the allowed range")]
    ProbabilityOutOfRange(f64),
    #[error("network run did not wake every node")]
    Incomplete,
    #[error("{what} would reach {requested}, above the configured limit of {limit}")]
    LimitExceeded {
        what: &'static str,
        requested: u128,
        limit: u128,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a configured size cap rather than bad input.
    pub fn is_limit(&self) -> bool {
        matches!(self, Error::LimitExceeded { .. })
    }
}
