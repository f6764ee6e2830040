//! Error type shared by all solver stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Geometry mapping is invalid (non-positive Jacobian, degenerate block).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Inconsistent or unusable configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Contact-node pairing failed (non-matching interfaces).
    #[error("pairing error: {0}")]
    Pairing(String),

    /// The 2:1 balance rule is violated on an edge.
    #[error("mesh is not 2:1 balanced: {0}")]
    Unbalanced(String),

    /// Iterative solver ran out of iterations.
    #[error("pcg did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The matrix handed to the CG solver is not positive definite.
    #[error("matrix is not SPD: direction of non-positive curvature at iteration {iteration}")]
    NotSpd { iteration: usize },

    /// Contact fixed-point loop hit its sweep budget.
    #[error("contact loop did not reach a stable active set in {sweeps} sweeps")]
    ContactNotConverged { sweeps: usize },

    /// Dimension mismatch between operators.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invariant breakage that indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
