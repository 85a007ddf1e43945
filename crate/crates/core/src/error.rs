use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid regime: {0}")]
    Regime(String),

    #[error("quadrature did not converge: estimated error {err_estimate:e} above target {target:e} after {panels} panels")]
    Convergence {
        err_estimate: f64,
        target: f64,
        panels: usize,
    },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("step size {dt} exceeds the stability limit {limit}")]
    StepSize { dt: f64, limit: f64 },

    #[error("Fock truncation too small: {0}")]
    Truncation(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
