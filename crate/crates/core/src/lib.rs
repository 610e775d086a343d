//! Hyperbolic heat kernels for odd dimensions, built exactly and evaluated
//! in the log domain.
//!
//! The crate has four layers:
//!
//! * [`radial_basis`] — the ladder functions `f_1 = ρ/sinh ρ`,
//!   `f_{l+1} = −df_l/dσ` (σ = cosh ρ), stored exactly as σ-polynomials with
//!   big-integer coefficients and evaluated through cancellation-monitored
//!   floating paths with a high-precision fallback.
//! * [`alpha_engine`] — the correction factor `α_n(t,ρ)` of the kernel
//!   factorization, built exactly as a sparse polynomial in `t` over
//!   monomials in the ladder functions, with exact σ- and t-derivatives.
//! * [`kernel`] — log-domain evaluation of `K_n` and its analytic
//!   derivatives: superconvexity margins, heat-equation residuals,
//!   normalization and semigroup oracles, and the proof intermediates
//!   `A` and `B_{m,i}`.
//! * [`monotonicity`] — geodesic-sphere mean curvature flows in `H^{n+1}`
//!   and the weighted-volume functional `F(t)`, together with the
//!   totally-geodesic equality case.
//!
//! [`suites`] packages the verification checks behind a single
//! [`report::VerificationReport`] shape shared by the CLI and the
//! acceptance tests.

pub mod alpha_engine;
mod bigfix;
pub mod error;
pub mod grid;
pub mod kernel;
mod logval;
pub mod monotonicity;
mod poly;
pub mod quadrature;
pub mod radial_basis;
pub mod real;
pub mod report;
pub mod suites;

pub use error::Error;
pub use real::Real;

/// Ladder table over `f64`, the precision used by the CLI and test suites.
pub type FlTable64 = radial_basis::FlTable<f64>;
/// Kernel engine over `f64`.
pub type KernelEngine64 = kernel::KernelEngine<f64>;
/// Kernel evaluation bundle over `f64`.
pub type KernelEval64 = kernel::KernelEval<f64>;
/// Single-precision variants; the exact layer is shared, only the
/// evaluation surface narrows.
pub type FlTable32 = radial_basis::FlTable<f32>;
pub type KernelEngine32 = kernel::KernelEngine<f32>;
pub type KernelEval32 = kernel::KernelEval<f32>;

/// Convenience result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
