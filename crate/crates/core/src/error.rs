use crate::arena::{Addr, IntervalTag};
use thiserror::Error;

/// Errors raised by the arena, the structures, the generators and the games.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("write to cell {addr} was not immediately preceded by a read of the same cell")]
    ProtocolViolation { addr: Addr },
    #[error("interval {requested} opened while {active} is still active")]
    NestedInterval {
        active: IntervalTag,
        requested: IntervalTag,
    },
    #[error("no interval is active")]
    NoActiveInterval,
    #[error("unknown snapshot id {0}")]
    UnknownSnapshot(usize),
    #[error("element {value} out of range (limit {limit})")]
    OutOfRange { value: u64, limit: u64 },
    #[error("{0} is not the root of its set")]
    NotARoot(u64),
    #[error("{0} and {1} are already in the same set")]
    SameSet(u64, u64),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("cannot link node {0} to itself")]
    SelfLink(u64),
    #[error("forest contract violated: {0} and {1} are already connected")]
    ForestViolation(u64, u64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bad metaquery: {0}")]
    BadQuery(String),
    #[error("edge ({0}, {1}) is not present")]
    DeleteMissingEdge(u64, u64),
    #[error("retrieval dictionary could not be built after {0} attempts")]
    BuildFailure(u32),
    #[error("cell holds {value}, expected a value below {limit}")]
    CorruptValue { value: u64, limit: u64 },
    #[error("bad cut: {0}")]
    BadCut(String),
    #[error("simulation diverged: {0}")]
    SimulationDiverged(String),
    #[error("op {index}: {message}")]
    ExpectationFailed { index: usize, message: String },
    #[error("unsupported operation: {0}")]
    UnsupportedOp(String),
    #[error("verifier rejected: {0}")]
    Rejected(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
