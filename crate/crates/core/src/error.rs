use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("tied optimal Sharpe ratio between arms {0:?}")]
    TiedOptimum(Vec<usize>),

    #[error("arm index {index} out of range for {len} arms")]
    IndexError { index: usize, len: usize },

    #[error("Sharpe ratio denominator is zero")]
    DegenerateDenominator,

    #[error("empty sample set")]
    EmptySample,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("arm {0} has not been pulled yet")]
    NotWarmedUp(usize),

    #[error("non-finite reward {0}")]
    InvalidReward(f64),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("domain error: {0}")]
    DomainError(String),
}
