use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("eigenvalue gap |lambda_{i} - lambda_{j}| = {gap:e} below threshold {threshold:e}")]
    DegenerateGap {
        i: usize,
        j: usize,
        gap: f64,
        threshold: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tail bound requires decay exponent > 1, got {0}")]
    InvalidExponent(f64),

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("bordered system is singular (eigenvalue collision at this step)")]
    SingularBorderedSystem,

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
