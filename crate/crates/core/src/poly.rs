//! Dense univariate polynomials with big-integer coefficients.
//!
//! Just enough arithmetic for the ladder recurrence; coefficients are stored
//! low-to-high and trailing zeros are trimmed.

use num_bigint::BigInt;
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: i64) -> Self {
        let mut p = IntPoly {
            coeffs: vec![BigInt::from(c)],
        };
        p.trim();
        p
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigInt::from(k))
            .collect();
        IntPoly::from_coeffs(coeffs)
    }

    /// Multiply by the variable (shift up one degree).
    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigInt::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        IntPoly { coeffs }
    }

    pub fn scale(&self, k: i64) -> Self {
        let k = BigInt::from(k);
        IntPoly::from_coeffs(self.coeffs.iter().map(|c| c * &k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        IntPoly::from_coeffs(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1))
    }

    /// Multiply by `x^2 - 1`.
    pub fn mul_x2_minus_1(&self) -> Self {
        self.mul_x().mul_x().sub(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_and_shift() {
        // p = 1 + 2x + 3x^2
        let p = IntPoly::from_coeffs(vec![1.into(), 2.into(), 3.into()]);
        let dp = p.derivative();
        assert_eq!(dp.coeffs(), &[BigInt::from(2), BigInt::from(6)]);
        assert_eq!(p.mul_x().degree(), Some(3));
    }

    #[test]
    fn x2_minus_1() {
        let one = IntPoly::constant(1);
        let q = one.mul_x2_minus_1();
        assert_eq!(
            q.coeffs(),
            &[BigInt::from(-1), BigInt::from(0), BigInt::from(1)]
        );
    }
}
