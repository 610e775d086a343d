//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ladder level {level} out of range (table holds levels 1..={max})")]
    LevelOutOfRange { level: u32, max: u32 },

    #[error("ladder level {level} exceeds the budget {budget}")]
    LadderOverflow { level: u32, budget: u32 },

    #[error("dimension must be an odd integer >= 1, got {0}")]
    EvenDimension(u32),

    #[error("dimension {n} needs ladder levels beyond the budget {budget}")]
    DimensionBudget { n: u32, budget: u32 },

    #[error("argument `{name}` out of domain: {value}")]
    Domain { name: &'static str, value: f64 },

    #[error("flow extinct: requested time {time} >= extinction time {t_star}")]
    ExtinctFlow { time: f64, t_star: f64 },

    #[error("integration step {step} too large: radius increased (unstable)")]
    UnstableStep { step: f64 },

    #[error("quadrature order {0} too low (minimum 8)")]
    QuadratureOrder(u32),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("usage: {0}")]
    Usage(String),
}
