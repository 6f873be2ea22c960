use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value produced while evaluating {context}")]
    NonFinite { context: &'static str },

    #[error("unknown problem `{name}`; valid names: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("dimension {n} invalid for problem `{name}`: {reason}")]
    InvalidDimension {
        name: String,
        n: usize,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("interpolation set is degenerate: {0}")]
    Degenerate(String),

    #[error("interpolation geometry could not be repaired after {attempts} attempts")]
    GeometryBeyondRepair { attempts: usize },

    #[error("gradient is zero; alignment undefined")]
    ZeroGradient,

    #[error("random draw degenerate after {attempts} attempts")]
    DegenerateDraw { attempts: usize },

    #[error("{0}")]
    Bench(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
