//! Gauss–Legendre quadrature: fixed rules plus an adaptive driver.
//!
//! Nodes and weights come from Newton iteration on the Legendre recurrence;
//! the adaptive driver bisects until an embedded lower-order rule agrees.

use crate::Result;
use crate::error::Error;
use crate::real::Real;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<F: Real> {
    nodes: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> GaussLegendre<F> {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "Gauss-Legendre needs order >= 2");
        let mut nodes = vec![F::zero(); order];
        let mut weights = vec![F::zero(); order];
        let n = order as f64;
        // symmetric rule: solve the upper half, mirror the rest
        for i in 0..order.div_ceil(2) {
            let mut x = F::of((std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos());
            let mut dp = F::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() <= F::epsilon() * F::of(2.0) {
                    break;
                }
            }
            let w = F::of(2.0) / ((F::one() - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, a: F, b: F, mut f: impl FnMut(F) -> F) -> F {
        let half = (b - a) * F::of(0.5);
        let mid = (a + b) * F::of(0.5);
        let mut acc = F::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative<F: Real>(order: usize, x: F) -> (F, F) {
    let mut p_prev = F::one();
    let mut p = x;
    for k in 1..order {
        let kf = F::of(k as f64);
        let next = ((F::of(2.0) * kf + F::one()) * x * p - kf * p_prev) / (kf + F::one());
        p_prev = p;
        p = next;
    }
    let n = F::of(order as f64);
    let d = n * (x * p - p_prev) / (x * x - F::one());
    (p, d)
}

/// Adaptive integration to relative accuracy `rel_tol` by panel bisection,
/// comparing embedded 16- and 32-point rules per panel.
pub struct Adaptive<F: Real> {
    low: GaussLegendre<F>,
    high: GaussLegendre<F>,
    pub rel_tol: F,
    pub max_depth: u32,
}

impl<F: Real> Adaptive<F> {
    pub fn new(rel_tol: F) -> Self {
        Adaptive {
            low: GaussLegendre::new(16),
            high: GaussLegendre::new(32),
            rel_tol,
            max_depth: 48,
        }
    }

    pub fn integrate(&self, a: F, b: F, f: &mut impl FnMut(F) -> F) -> Result<F> {
        // composite seed pass sets the absolute scale; 32 panels resolve
        // narrow features a single whole-interval rule would miss
        let floor = F::of(1e-300);
        let seed_panels = 32;
        let width = (b - a) / F::of(seed_panels as f64);
        let mut scale = F::zero();
        let mut stack = Vec::with_capacity(seed_panels);
        for i in 0..seed_panels {
            let lo = a + width * F::of(i as f64);
            let hi = if i == seed_panels - 1 {
                b
            } else {
                a + width * F::of(i as f64 + 1.0)
            };
            scale += self.high.integrate(lo, hi, &mut *f).abs();
            stack.push((lo, hi, 0u32));
        }
        let scale = scale.max(floor);

        let mut total = F::zero();
        let mut panels = 0u32;
        while let Some((lo, hi, depth)) = stack.pop() {
            panels += 1;
            if panels > 40_000 {
                return Err(Error::QuadratureNonConvergence(
                    "panel budget exhausted".into(),
                ));
            }
            let rough = self.low.integrate(lo, hi, &mut *f);
            let fine = self.high.integrate(lo, hi, &mut *f);
            let err = (fine - rough).abs();
            let width_share = (hi - lo) / (b - a);
            if err <= self.rel_tol * scale * width_share.max(F::of(1e-4)) || err <= floor {
                total += fine;
                continue;
            }
            if depth >= self.max_depth {
                return Err(Error::QuadratureNonConvergence(format!(
                    "panel [{:e}, {:e}] did not converge at depth {depth}",
                    lo.to_f64_lossy(),
                    hi.to_f64_lossy()
                )));
            }
            let mid = (lo + hi) * F::of(0.5);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_known_values() {
        let rule: GaussLegendre<f64> = GaussLegendre::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[1] - x).abs() < 1e-15);
        assert!((rule.weights[0] - 1.0).abs() < 1e-15);

        let rule3: GaussLegendre<f64> = GaussLegendre::new(3);
        assert!((rule3.nodes[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((rule3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!(rule3.nodes[1].abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let rule: GaussLegendre<f64> = GaussLegendre::new(8);
        let v = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_gaussian_tail() {
        let quad: Adaptive<f64> = Adaptive::new(1e-12);
        let v = quad
            .integrate(0.0, 20.0, &mut |x: f64| (-x * x).exp())
            .unwrap();
        let expect = std::f64::consts::PI.sqrt() / 2.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_narrow_peak() {
        let quad: Adaptive<f64> = Adaptive::new(1e-11);
        // sharp Gaussian of width 1e-3 centered at 0.3
        let s = 1e-3;
        let v = quad
            .integrate(0.0, 1.0, &mut |x: f64| {
                (-((x - 0.3) / s).powi(2) / 2.0).exp()
            })
            .unwrap();
        let expect = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((v / expect - 1.0).abs() < 1e-10, "{v:e} vs {expect:e}");
    }

    #[test]
    fn f32_rule_builds() {
        let rule: GaussLegendre<f32> = GaussLegendre::new(12);
        let v = rule.integrate(0.0f32, 1.0, |x| x * x);
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }
}
