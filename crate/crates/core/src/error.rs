//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Point location failed: the query point lies outside every element by
    /// more than the geometric tolerance.
    #[error("point {point:?} lies outside the mesh domain")]
    PointOutsideDomain { point: [f64; 2] },

    /// The implicit characteristic solve did not reach its fixed point.
    #[error("characteristic fixed-point iteration failed to converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A velocity gradient was required but the field supplies none and the
    /// finite-difference fallback is disabled.
    #[error("velocity field supplies no gradient and the finite-difference fallback is disabled")]
    GradientUnavailable,

    /// Diffusion coefficient must be strictly positive.
    #[error("diffusion coefficient must be positive, got {value:e}")]
    NonPositiveEpsilon { value: f64 },

    /// The conjugate-gradient solve exceeded its iteration budget.
    #[error("linear solver diverged: {iterations} iterations, relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },

    /// Adaptive time stepping shrank the step below `k_min`.
    #[error("time step underflow: k = {k:e} fell below k_min = {k_min:e} at t = {t:e}")]
    StepUnderflow { t: f64, k: f64, k_min: f64 },

    /// A mesh-hierarchy precondition was violated (e.g. coarse mesh not
    /// reachable from the fine one).
    #[error("mesh hierarchy error: {0}")]
    Hierarchy(String),
}
