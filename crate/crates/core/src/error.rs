use thiserror::Error;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A tuning parameter lies outside the range where the closed-form bounds
    /// were established. Callers may retry with the permissive variant.
    #[error("{name} = {value} is outside the validity range {range}")]
    OutOfValidityRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("sketch size {m} exceeds padded row count {n_pad}")]
    SketchTooLarge { m: usize, n_pad: usize },

    #[error("sketch growth exhausted at m = {m} (cap {cap})")]
    SketchExhausted { m: usize, cap: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("matrix is rank deficient: sigma_min / sigma_max = {ratio:e}")]
    RankDeficient { ratio: f64 },

    #[error("configuration infeasible at this scale: {0}")]
    InfeasibleAtDeskScale(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
