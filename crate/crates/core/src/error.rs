use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid spacing: {0}")]
    InvalidSpacing(String),

    #[error("grids do not share endpoints: [{a0}, {b0}] vs [{a1}, {b1}]")]
    EndpointMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-positive density {rho} in cell {cell}")]
    NonPositiveDensity { cell: usize, rho: f64 },

    #[error("non-positive pressure {pressure} in cell {cell} at t = {time}")]
    Positivity {
        cell: usize,
        time: f64,
        pressure: f64,
    },

    #[error("non-finite value in cell {cell} after stage {stage}")]
    NonFinite { cell: usize, stage: usize },

    #[error("too few cells for {scheme}: need {need}, have {have}")]
    TooFewCells {
        scheme: &'static str,
        need: usize,
        have: usize,
    },

    #[error("invalid configuration at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("step limit reached: {steps} steps, t = {time}")]
    StepLimit { steps: usize, time: f64 },

    #[error("zoning failed: {0}")]
    Zoning(String),

    #[error("non-finite activation in {0}")]
    NonFiniteActivation(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("unsupported model version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("corrupt dataset file: {0}")]
    CorruptDataset(String),

    #[error("staircase sampling failed after {0} attempts")]
    Staircase(usize),

    #[error("vacuum generated by Riemann data")]
    Vacuum,

    #[error("zero reference norm")]
    ZeroReferenceNorm,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
