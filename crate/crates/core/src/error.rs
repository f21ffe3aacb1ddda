use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid album: {0}")]
    InvalidInstance(String),

    #[error("state {state} is outside 0..={n}")]
    InvalidState { state: usize, n: usize },

    #[error("horizon t_max = {t_max} is smaller than the album size {n}")]
    HorizonTooSmall { t_max: u64, n: usize },

    #[error("inclusion-exclusion oracle supports n <= {max}, got n = {n}")]
    OracleRange { n: usize, max: usize },

    #[error("trial index must be >= 1, got {0}")]
    InvalidTrial(u64),

    #[error("probability {0} is outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid bound parameter: {0}")]
    InvalidBound(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimulation(String),

    #[error("cost of {stickers} stickers at {unit_price_cents} cents overflows 64-bit cents")]
    CostOverflow {
        stickers: u64,
        unit_price_cents: u64,
    },
}
