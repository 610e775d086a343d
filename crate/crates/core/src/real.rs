//! Scalar abstraction for the floating-point layer.
//!
//! The exact layer (big-integer σ-polynomials, rational Maclaurin series)
//! is independent of the scalar; everything numeric is generic over [`Real`]
//! so the same code runs at `f32` and `f64`. High-precision fallbacks
//! compute in fixed-point decimal and convert through `f64`.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Lossy conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
