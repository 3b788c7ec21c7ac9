use thiserror::Error;

use tlbm_bench::BenchError;
use tlbm_planner::PlanError;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// A property or gate did not hold.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Bad configuration or arguments; nothing ran.
    #[error("config error: {0}")]
    Config(String),
    /// Something went wrong while running.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<tlbm_core::Error> for CliError {
    fn from(e: tlbm_core::Error) -> Self {
        match e {
            tlbm_core::Error::Config(_) => CliError::config(e),
            other => CliError::runtime(other),
        }
    }
}

/// Planner errors come from the inputs; I/O while writing results is
/// mapped by the caller.
impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::config(e)
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Params(_) => CliError::config(e),
            BenchError::Check(_) => CliError::Validation(e.to_string()),
            BenchError::Core(inner) => inner.into(),
            other => CliError::runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
