use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] tlbm_core::Error),
    #[error(transparent)]
    Plan(#[from] tlbm_planner::PlanError),
    /// The operation under test produced wrong output; nothing was timed.
    #[error("correctness check failed: {0}")]
    Check(String),
    #[error("invalid benchmark parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
