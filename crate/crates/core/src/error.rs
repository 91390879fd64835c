use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("events or tuples belong to different universes")]
    UniverseMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("agent set must not be empty")]
    EmptyAgentSet,

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("exact shift by an infinite offset is undefined")]
    InfiniteShift,

    #[error("invalid universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid timing spec: {0}")]
    InvalidSpec(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("event for agent `{agent}` is not local to that agent")]
    NotLocal { agent: String },

    #[error("{what} needs {size} candidates, over the guard of {limit}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("iteration did not stabilize within {bound} steps (function is not monotone)")]
    NotStabilized { bound: usize },

    #[error("instance is not solvable")]
    Unsolvable,

    #[error("protocol result does not solve the instance: {0}")]
    NotASolution(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}
