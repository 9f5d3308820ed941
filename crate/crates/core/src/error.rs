use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates one of the model's invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration failed to reach the configured tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("spreading factor SF{0} is not in the table")]
    UnknownSf(u8),

    /// The device cannot fit `copies` transmissions and the sleep phase into one period.
    #[error("infeasible period: sleep time {sleep_s} s is negative for M={copies}, P={period_s} s")]
    InfeasiblePeriod {
        copies: u32,
        period_s: f64,
        sleep_s: f64,
    },

    #[error("exact enumeration supports n <= {max}, got n = {n}")]
    EnumerationBound { n: u32, max: u32 },

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
