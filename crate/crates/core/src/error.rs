use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("joint action space has {outcomes} outcomes, above the enumeration limit of {limit}")]
    EnumerationTooLarge { outcomes: u128, limit: u128 },
    #[error("value at index {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("empty value list")]
    EmptyValues,
    #[error("probability {value} at index {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("step size {0} is outside (0, 1]")]
    StepSizeOutOfRange(f64),
    #[error("no exact mixed-utility oracle: {0}")]
    OracleUnavailable(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid mixed profile: {0}")]
    InvalidProfile(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid game description: {0}")]
    Description(String),
}

pub type Result<T> = std::result::Result<T, Error>;
