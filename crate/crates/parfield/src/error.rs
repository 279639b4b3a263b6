use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("solver did not converge in cycle {cycle}: {detail}")]
    Convergence { cycle: usize, detail: String },
    #[error("series not converged after {terms} terms (tail bound {tail_bound:e})")]
    Series { terms: usize, tail_bound: f64, partial: (f64, f64) },
    #[error("unsupported region: {0}")]
    Unsupported(String),
    #[error("sampling failure: {0}")]
    Refinement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
