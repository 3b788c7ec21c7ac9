use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("allocation error: {0}")]
    Allocation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step error at site ({x}, {y}): {source}")]
    Site {
        x: usize,
        y: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("protocol error on rank {rank}: {detail}")]
    Protocol { rank: usize, detail: String },

    #[error("rank {rank} stalled at step {step} waiting for {waiting_on}")]
    Stalled { rank: usize, step: u64, waiting_on: String },

    #[error("rank {rank} aborted: {reason}")]
    Aborted { rank: usize, reason: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn at_site(self, x: usize, y: usize) -> Self {
        Error::Site { x, y, source: Box::new(self) }
    }
}
