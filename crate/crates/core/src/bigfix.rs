//! Fixed-point decimal arithmetic on big integers.
//!
//! A [`BigFix`] stores `v * 10^-scale`. All operands of one computation share
//! the same scale, so addition is exact and multiplication/division round at
//! one unit of the last decimal place. The ladder closed forms lose roughly
//! `2l` digits to cancellation as ρ decreases, so callers pick the scale from
//! a measured cancellation estimate plus guard digits and re-verify at a
//! higher scale.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BigFix {
    v: BigInt,
    scale: u32,
}

fn pow10(scale: u32) -> BigInt {
    BigInt::from(10u32).pow(scale)
}

impl BigFix {
    pub fn zero(scale: u32) -> Self {
        BigFix {
            v: BigInt::zero(),
            scale,
        }
    }

    pub fn one(scale: u32) -> Self {
        BigFix {
            v: pow10(scale),
            scale,
        }
    }

    pub fn from_bigint(n: &BigInt, scale: u32) -> Self {
        BigFix {
            v: n * pow10(scale),
            scale,
        }
    }

    pub fn from_ratio(r: &num_rational::BigRational, scale: u32) -> Self {
        BigFix {
            v: div_round(&(r.numer() * pow10(scale)), r.denom()),
            scale,
        }
    }

    /// Conversion from a finite `f64` (a dyadic rational), rounded at the
    /// last decimal place.
    pub fn from_f64(x: f64, scale: u32) -> Self {
        assert!(x.is_finite(), "BigFix::from_f64 needs a finite value");
        let (mant, exp) = integer_decode(x);
        let num = BigInt::from(mant) * pow10(scale);
        let v = if exp >= 0 {
            num << exp as u32
        } else {
            div_round(&num, &(BigInt::one() << (-exp) as u32))
        };
        BigFix { v, scale }
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        BigFix {
            v: &self.v + &other.v,
            scale: self.scale,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        BigFix {
            v: &self.v - &other.v,
            scale: self.scale,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        BigFix {
            v: div_round(&(&self.v * &other.v), &pow10(self.scale)),
            scale: self.scale,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        assert!(!other.v.is_zero(), "BigFix division by zero");
        BigFix {
            v: div_round(&(&self.v * pow10(self.scale)), &other.v),
            scale: self.scale,
        }
    }

    pub fn div_int(&self, k: u32) -> Self {
        BigFix {
            v: div_round(&self.v, &BigInt::from(k)),
            scale: self.scale,
        }
    }

    pub fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.scale);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `exp(self)` by halving to |r| <= 1/2, Maclaurin sum, then squaring.
    ///
    /// Each squaring doubles the relative error, so callers must budget
    /// guard digits (~2 per halving step plus the series truncation).
    pub fn exp(&self) -> Self {
        let scale = self.scale;
        let half = BigFix {
            v: pow10(scale) / 2,
            scale,
        };
        let mut halvings = 0u32;
        let mut r = self.clone();
        while r.v.magnitude() > half.v.magnitude() {
            r = r.div_int(2);
            halvings += 1;
            assert!(halvings < 64, "exp argument out of range");
        }
        let mut sum = Self::one(scale);
        let mut term = Self::one(scale);
        let mut k = 1u32;
        loop {
            term = term.mul(&r).div_int(k);
            if term.v.is_zero() {
                break;
            }
            sum = sum.add(&term);
            k += 1;
            assert!(k < 10_000, "exp series failed to terminate");
        }
        for _ in 0..halvings {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// Approximate as `f64`; under/overflows for values outside `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.v.is_zero() {
            return 0.0;
        }
        let neg = self.v.is_negative();
        let mag = self.v.magnitude();
        let digits = (mag.bits() as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let keep = 16i64;
        let shift = digits - keep;
        let (q, e) = if shift > 0 {
            let q = mag / num_bigint::BigUint::from(10u32).pow(shift as u32);
            (q.to_f64().unwrap_or(f64::INFINITY), shift)
        } else {
            (mag.to_f64().unwrap_or(f64::INFINITY), 0)
        };
        let exp10 = e - self.scale as i64;
        let x = q * pow10_f64(exp10);
        if neg { -x } else { x }
    }
}

/// `10^k` as `f64`, split to stay in range for |k| up to ~600.
fn pow10_f64(k: i64) -> f64 {
    if k.abs() <= 300 {
        10f64.powi(k as i32)
    } else {
        let half = k / 2;
        10f64.powi(half as i32) * 10f64.powi((k - half) as i32)
    }
}

/// Round-half-away integer division.
fn div_round(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(!den.is_zero());
    let half = den.abs() / 2;
    let adj = if num.is_negative() == den.is_negative() {
        num + half * den.signum()
    } else {
        num - half * den.signum()
    };
    adj / den
}

/// Mantissa/exponent split of a finite `f64` (value = mant * 2^exp).
fn integer_decode(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1i64 };
    let mut exponent = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = if exponent == 0 {
        (bits & 0x000f_ffff_ffff_ffff) << 1
    } else {
        (bits & 0x000f_ffff_ffff_ffff) | 0x0010_0000_0000_0000
    };
    exponent -= 1075;
    (sign * mantissa as i64, exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(x: &BigFix, digits: usize) -> String {
        let s = x.v.magnitude().to_string();
        let scale = x.scale as usize;
        let (int_part, frac_part) = if s.len() > scale {
            (
                s[..s.len() - scale].to_string(),
                s[s.len() - scale..].to_string(),
            )
        } else {
            ("0".to_string(), format!("{:0>width$}", s, width = scale))
        };
        let mut out = format!("{int_part}.{frac_part}");
        out.truncate(int_part.len() + 1 + digits);
        out
    }

    #[test]
    fn exp_one_matches_e() {
        let e = BigFix::one(60).exp();
        let known = "2.71828182845904523536028747135266249775724709369995957496696";
        let got = render(&e, 50);
        assert_eq!(&got, &known[..got.len()]);
    }

    #[test]
    fn exp_inverse_is_reciprocal() {
        let a = BigFix::from_f64(0.05, 60).exp();
        let b = BigFix::from_f64(-0.05, 60).exp();
        let prod = a.mul(&b);
        let err = prod.sub(&BigFix::one(60));
        // relative error within a few units of the 58th digit
        assert!(*err.v.magnitude() < num_bigint::BigUint::from(10u64).pow(4));
    }

    #[test]
    fn f64_roundtrip() {
        for &x in &[1.5, 0.1, 3.7e10, -2.25e-9] {
            let b = BigFix::from_f64(x, 40);
            assert!((b.to_f64() - x).abs() <= 1e-15 * x.abs());
        }
    }

    #[test]
    fn large_argument_exp() {
        // exp(40) ~ 2.3538526683701998e17
        let x = BigFix::from_f64(40.0, 60);
        let e40 = x.exp().to_f64();
        assert!((e40 / 2.3538526683701998e17 - 1.0).abs() < 1e-13);
    }
}
