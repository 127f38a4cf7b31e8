use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Lorentz invariant radicand {radicand:e} is negative beyond rounding (c = {c})")]
    NegativeRadicand { radicand: f64, c: f64 },

    #[error("light speed c = {c} does not exceed the threshold c0 = {c0}")]
    BelowThreshold { c: f64, c0: f64 },

    #[error(
        "monotone sandwich violated at iteration {iteration}, time node {time_index}, \
         grid node {node}: {relation} off by {magnitude:e}"
    )]
    Monotonicity {
        iteration: usize,
        time_index: usize,
        node: usize,
        relation: &'static str,
        magnitude: f64,
    },

    #[error("beginning condition fails: {0}")]
    BeginningCondition(String),

    #[error("no convergence after {iterations} iterations (last gap {last_gap:e})")]
    NoConvergence {
        iterations: usize,
        last_gap: f64,
        gap_history: Vec<f64>,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
