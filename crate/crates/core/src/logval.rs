//! Signed log-domain scalar: `sign * exp(ln)`.
//!
//! Used wherever kernel quantities can leave the representable range of the
//! scalar type (`f_40(40) ~ 1e-638`, products of kernels at large distance).

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVal<F: Real> {
    /// -1, 0 or +1.
    pub sign: i8,
    /// Natural log of the magnitude; `-inf` iff `sign == 0`.
    pub ln: F,
}

impl<F: Real> LogVal<F> {
    pub fn zero() -> Self {
        LogVal {
            sign: 0,
            ln: F::neg_infinity(),
        }
    }

    pub fn from_value(x: F) -> Self {
        if x == F::zero() {
            Self::zero()
        } else if x > F::zero() {
            LogVal {
                sign: 1,
                ln: x.ln(),
            }
        } else {
            LogVal {
                sign: -1,
                ln: (-x).ln(),
            }
        }
    }

    /// Positive value from its log.
    pub fn from_ln(ln: F) -> Self {
        LogVal { sign: 1, ln }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Back to a plain scalar; may under- or overflow by design.
    pub fn value(&self) -> F {
        F::of(self.sign as f64) * self.ln.exp()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self::zero();
        }
        LogVal {
            sign: self.sign * other.sign,
            ln: self.ln + other.ln,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_zero() {
        let a = LogVal::from_value(-2.5f64);
        assert_eq!(a.sign, -1);
        assert!((a.value() + 2.5).abs() < 1e-15);
        assert!(LogVal::<f64>::from_value(0.0).is_zero());
        assert_eq!(LogVal::<f64>::zero().value(), 0.0);
    }

    #[test]
    fn mul_tracks_signs() {
        let a = LogVal::from_value(-3.0f64);
        let b = LogVal::from_value(2.0f64);
        let c = a.mul(&b);
        assert!((c.value() + 6.0).abs() < 1e-14);
    }
}
