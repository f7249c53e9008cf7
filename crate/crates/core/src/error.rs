use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index ({k}, {t}) outside a {rows} x {cols} grid")]
    OutOfRange {
        k: usize,
        t: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("time-correlation matrix is not positive semidefinite (pivot {pivot:e} at row {row})")]
    NotPositiveSemidefinite { row: usize, pivot: f64 },

    #[error("channel estimate is zero at subcarrier {k}, symbol {t}")]
    DegenerateEstimate { k: usize, t: usize },

    #[error("estimation error variance {sigma_e2} leaves no usable signal power")]
    EstimationCollapse { sigma_e2: f64 },

    #[error("payload of {bits} bits needs rate {rate:.6} > {max_rate} bits per channel use")]
    InfeasiblePayload { bits: u32, rate: f64, max_rate: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
