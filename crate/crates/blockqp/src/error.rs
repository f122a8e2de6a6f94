use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix not positive definite{}: {detail}", match block { Some(i) => format!(" (block {i})"), None => String::new() })]
    NotPositiveDefinite { block: Option<usize>, detail: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("maximum iterations ({0}) reached")]
    MaxIterations(usize),

    #[error("generator error: {0}")]
    Generator(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
