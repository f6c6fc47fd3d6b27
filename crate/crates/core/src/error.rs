use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("log-density is not finite at state {state}")]
    NonFiniteDensity { state: String },

    #[error("auxiliary value {value} lies outside the randomization support {support}")]
    OutsideSupport { value: String, support: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("only {found} observations recorded, at least {required} needed")]
    InsufficientEvents { found: usize, required: usize },

    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("config {location}: {message}")]
    Config { location: String, message: String },

    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
