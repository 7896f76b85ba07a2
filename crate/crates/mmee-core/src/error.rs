//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by configuration validation, model evaluation, the solver,
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violates its invariant. Carries the field name.
    #[error("invalid configuration: field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    /// Mismatched or invalid dimensions between inputs.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An input is outside the mathematical domain of the operation
    /// (e.g. zero power where a logarithm of a ratio is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// A channel column is identically zero; MRT normalization is undefined.
    #[error("degenerate channel: column {column} has zero norm")]
    DegenerateChannel { column: usize },

    /// Total consumed power is zero; the efficiency ratio is undefined.
    #[error("degenerate power: total transmit + circuit power is zero")]
    DegeneratePower,

    /// A grid search would exceed the evaluation budget.
    #[error("grid budget exceeded: {requested:.3e} points > budget {budget:.3e}")]
    Budget { requested: f64, budget: f64 },

    /// An experiment specification does not satisfy an operation's
    /// preconditions (e.g. too few sweep points for a regression).
    #[error("specification error: {0}")]
    Specification(String),

    /// Failure reading or writing a file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Failure parsing a config file. The message carries line/column info.
    #[error("parse error in {path}:\n{message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
