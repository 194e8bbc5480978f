use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid price grid: {0}")]
    InvalidGrid(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid moment envelope: {0}")]
    InvalidEnvelope(String),
    #[error("infeasible envelope: {0}")]
    InfeasibleEnvelope(String),
    #[error("no history")]
    NoHistory,
    #[error("degenerate instance: optimal revenue is zero")]
    DegenerateInstance,
    #[error("grid too large for brute force: {points} points (limit {limit})")]
    GridTooLarge { points: usize, limit: usize },
    #[error("instance too large for exact allocation: {arcs} toll arcs (limit {limit})")]
    AllocationTooLarge { arcs: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("disconnected: no path from origin to destination")]
    Disconnected,
    #[error("no toll-free alternative path")]
    NoAlternative,
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("lp solver failure: {0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
