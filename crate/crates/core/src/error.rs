use thiserror::Error;

/// Errors raised by the verification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evaluation point {x} lies on kink radius {kink}")]
    OnKink { x: f64, kink: f64 },
    #[error("tail grows like |y|^{exponent}, not integrable against |y|^(-n-2s) for s = {s}")]
    Divergent { exponent: f64, s: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, FracError>;
