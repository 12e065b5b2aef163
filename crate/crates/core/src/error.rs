use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("structural condition k2/k1 < m + (m-1)(N-2)/b fails (margin {margin})")]
    Inadmissible { margin: f64 },
    #[error("probe set is empty")]
    EmptyProbe,
    #[error("outside the domain of definition: {0}")]
    DomainError(String),
    #[error("no admissible parameters: {0}")]
    Infeasible(String),
    #[error("parameters fail their condition system: {0}")]
    ConditionNotVerified(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("ordering fails at the initial time (violation {0})")]
    OrderingViolatedAtStart(f64),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("chaining inequality violated: {0}")]
    LinkViolated(String),
}
