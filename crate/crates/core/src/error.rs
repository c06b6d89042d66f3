use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid label space: {0}")]
    InvalidSpace(String),
    #[error("unknown label `{label}` in space `{space}`")]
    UnknownLabel { space: String, label: String },
    #[error("history alternation violated at entry {index}")]
    AlternationViolation { index: usize },
    #[error("merit window [{start}, {end}) contains no entries")]
    EmptyWindow { start: usize, end: usize },
    #[error("merit window [{start}, {end}) exceeds history length {len}")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("agent and environment label spaces disagree: {0}")]
    SpaceMismatch(String),
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("history could not be reproduced within {budget} resets")]
    UnrealizableHistory { budget: u64 },
    #[error("post-selection exhausted its budget of {budget} resets")]
    RetryBudgetExhausted { budget: u64 },
    #[error("maze graph is not connected: {0}")]
    DisconnectedGraph(String),
    #[error("vertex {vertex} label disagrees with BFS distances: {detail}")]
    LabelInconsistentWithBfs { vertex: usize, detail: String },
    #[error("invalid maze: {0}")]
    InvalidMaze(String),
    #[error("expected {expected} actions, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("distribution row does not normalise: {0}")]
    BadDistribution(String),
    #[error("environment cannot be oracularized: {0}")]
    NotOracularizable(String),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("no winning item found within {queries} oracle queries")]
    NoWinnerExists { queries: u64 },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("conditional norm {0:e} too small to renormalise")]
    ZeroNorm(f64),
    #[error("register layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid quantum state: {0}")]
    InvalidState(String),
    #[error("scenario too large: {0}")]
    ScenarioTooLarge(String),
    #[error("environment map is not self-inverse: deviation {0:e}")]
    ExtensionNotSelfInverse(f64),
    #[error("percept space is not trivial: {0}")]
    NotTrivialPercept(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
