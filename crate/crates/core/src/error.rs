use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty network")]
    EmptyNetwork,

    #[error("degenerate network: no links to fit")]
    DegenerateNetwork,

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("index {index} out of range for layer of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label propagation needs at least one seed")]
    NoSeeds,

    #[error("no seed layer: dataset has no verified user with retweet interactions")]
    NoSeedLayer,

    #[error("dataset has no URL shares")]
    NoUrlShares,

    #[error("invalid URL {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no parseable records in input")]
    NoRecords,

    #[error("group references unknown {kind} {id:?}")]
    UnknownMember { kind: &'static str, id: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("snapshot: {0}")]
    Snapshot(#[from] bincode::Error),
}

impl Error {
    /// Whether the error reports a solver that ran out of iterations.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
