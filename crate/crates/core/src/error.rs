use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Mismatched matrix or vector dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Exact enumeration refused because the game is too large.
    #[error("{players} players exceeds the exact enumeration limit of {limit}; use the sampled estimator")]
    Capacity { players: usize, limit: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
