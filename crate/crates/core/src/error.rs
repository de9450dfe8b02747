use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field `{field}` has length {len}, grid has {n} points")]
    LengthMismatch { field: String, len: usize, n: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("simpson rule needs an odd point count, got {0}")]
    SimpsonEven(usize),
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("u = {0} lies outside the solution range u <= 0")]
    OutOfRange(f64),
    #[error("inadmissible asymptotics: {0}")]
    Inadmissible(String),
    #[error("input is not mean-zero (weighted mean {0:e})")]
    NotMeanZero(f64),
    #[error("ratio undefined for a constant input")]
    ConstantInput,
    #[error("exponential overflow at x = {x}")]
    Overflow { x: f64 },
    #[error("constraint gradients are numerically dependent (normal matrix condition {0:e})")]
    DependentConstraints(f64),
    #[error("no such field `{0}`")]
    MissingField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
