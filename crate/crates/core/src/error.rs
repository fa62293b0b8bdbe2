//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or market parameter violates its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical routine failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Implied-volatility inversion rejected the quote.
    #[error("implied vol inversion: {0}")]
    Inversion(String),

    /// Least-squares or nonlinear fitting failed.
    #[error("fit failure: {0}")]
    Fit(String),

    /// A model was asked to produce a hedge before being fitted.
    #[error("model state: {0}")]
    State(String),

    /// Malformed input data.
    #[error("input: {0}")]
    Input(String),

    /// Inconsistent or unusable configuration.
    #[error("configuration: {0}")]
    Config(String),

    /// Evaluation of a hedging strategy was impossible.
    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
