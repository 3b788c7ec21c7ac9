use thiserror::Error;

pub type Result<T, E = PlanError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid model input: {0}")]
    Input(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("bad bandwidth table: {0}")]
    Table(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
