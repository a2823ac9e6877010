use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    #[error("length mismatch: weights have {weights} entries, dual vector has {dual}")]
    LengthMismatch { weights: usize, dual: usize },

    #[error("dual coordinate {index} = {value} lies outside [-1, 1]")]
    OutOfBox { index: usize, value: f64 },

    #[error("dual coordinate {index} = {value} is on the boundary; gradient is unbounded")]
    Boundary { index: usize, value: f64 },

    #[error("alpha = {alpha} is in the boundary band of the domain (|alpha| ~ {l1})")]
    BoundaryAlpha { alpha: f64, l1: f64 },

    #[error("alpha = {alpha} lies outside the closed domain [-{l1}, {l1}]")]
    Infeasible { alpha: f64, l1: f64 },

    #[error("all weights are zero; the rate function is the indicator of {{0}}")]
    Degenerate,

    #[error("root solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("problem too large: {what} = {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}
