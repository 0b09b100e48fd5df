//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its legal range.
    #[error("invalid parameter `{name}` = {value}: expected {legal}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        legal: &'static str,
    },

    /// A structured input (sequence, block) does not satisfy its precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The two hypotheses have no mean separation; no informative threshold exists.
    #[error("degenerate separation: the two hypotheses are indistinguishable (theta = 0)")]
    DegenerateSeparation,

    /// The moment-matching residual has no sign change on the search bracket.
    #[error("no root on bracket [{x0}, {x1}]: f({x0}) = {f0}, f({x1}) = {f1}")]
    NoRoot { x0: f64, x1: f64, f0: f64, f1: f64 },

    /// Bisection exceeded its iteration cap.
    #[error("bisection did not converge within {max_iter} iterations")]
    Convergence { max_iter: usize },

    /// Fewer samples than the estimator requires.
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    /// An experiment spec names an unknown axis, key, or preset.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
