use pme_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 2 for infeasible parameter systems, 3 for failed verifications, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Infeasible(_) | CoreError::Inadmissible { .. }) => 2,
            CliError::Core(
                CoreError::ConditionNotVerified(_)
                | CoreError::LinkViolated(_)
                | CoreError::OrderingViolatedAtStart(_),
            )
            | CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
