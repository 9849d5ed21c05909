use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A time step outside the domain of a mean schedule.
    #[error("schedule domain: t={t} outside 1..={horizon}")]
    ScheduleDomain { t: u64, horizon: u64 },

    /// An argument outside the mathematical domain of an operation.
    #[error("domain: {0}")]
    Domain(String),

    /// An invalid or inconsistent configuration.
    #[error("config: {0}")]
    Config(String),

    /// Grid too coarse for the convolution recursion; the normalization
    /// of a tabulated density drifted beyond the allowed limit.
    #[error("resolution: normalization drift {drift:.3e} at recursion order {order} exceeds {limit:.1e}")]
    Resolution { order: usize, drift: f64, limit: f64 },

    /// A reference CDF misbehaved (non-monotone or out of [0, 1]).
    #[error("reference: {0}")]
    Reference(String),

    /// Two runs or curves that cannot be compared.
    #[error("comparison: {0}")]
    Comparison(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
