use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("state {state} out of range (system has {n} states)")]
    StateOutOfRange { state: usize, n: usize },

    #[error("action {action} is not available in state {state}")]
    InvalidAction { state: usize, action: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state {state} has {count} possible successors; a binary process allows at most two")]
    NotBinary { state: usize, count: usize },

    #[error("chain has more than one recurrent class: {0}")]
    Reducible(String),

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("pair ({0}, {1}) carries no stationary mass in either orientation")]
    UndefinedPair(usize, usize),

    #[error("weights diverged at step {step}: |w| = {norm:e} exceeds {bound:e}")]
    Diverged { step: u64, norm: f64, bound: f64 },

    #[error("integration produced a non-finite state")]
    NonFinite,

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config { field: field.into(), message: message.into() }
    }
}
