use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge (partial value {partial}): {context}")]
    Quadrature { partial: f64, context: String },
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no continuous boundary extension detected: {0}")]
    NoBoundaryExtension(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
