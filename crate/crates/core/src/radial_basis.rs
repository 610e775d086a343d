//! The ladder functions `f_1(ρ) = ρ/sinh ρ` and `f_{l+1} = -df_l/dσ` with
//! `σ = cosh ρ`.
//!
//! Every level has the exact closed form
//!
//! ```text
//! f_l(ρ) = (p_l(σ)·ρ + q_l(σ)·sinh ρ) / sinh^{2l-1} ρ
//! ```
//!
//! with big-integer σ-polynomials obeying
//! `p_{l+1} = (2l-1)σ·p_l - (σ²-1)·p_l'` and
//! `q_{l+1} = (2l-2)σ·q_l - (σ²-1)·q_l' - p_l`. The numerator has a zero of
//! order `2l-1` at ρ = 0, so the closed form cancels catastrophically for
//! small ρ and large `l`. Evaluation therefore runs through three paths:
//!
//! * ρ < [`RHO_SWITCH`]: exact-rational Maclaurin series (even powers
//!   through ρ^12), which is cancellation-free in this range for every
//!   level the table can hold;
//! * otherwise a scaled f64 closed form whose cancellation is measured on
//!   the spot and accepted only below [`KAPPA_MAX`];
//! * else a fixed-point big-integer evaluation at a precision picked from
//!   the measured cancellation, verified by recomputation and cached.
//!
//! All numeric work targets the scaled quantity `g_l = f_l / f_1^l`, which
//! stays inside `f64` range for every level and ρ the table accepts, while
//! `f_l` itself underflows (`f_40(40) ~ 1e-638`). Plain values are
//! reassembled as `g_l · f_1^l`.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Result;
use crate::bigfix::BigFix;
use crate::error::Error;
use crate::grid::{Axis, GridSpec};
use crate::poly::IntPoly;
use crate::real::Real;
use crate::report::{Location, VerificationReport, WorstMin};

/// Below this ρ the Maclaurin path is used.
pub const RHO_SWITCH: f64 = 0.05;
/// Highest power of ρ² kept in a stored series (terms through ρ^12).
pub const SERIES_ORDER: usize = 6;
/// Hard cap on the ladder length a table may hold.
pub const LEVEL_CAP: u32 = 128;
/// Evaluation domain limit; everything of interest lives far below this.
pub const RHO_MAX: f64 = 1e4;
/// Largest tolerated ratio of closed-form term magnitude to result before
/// the high-precision path takes over.
const KAPPA_MAX: f64 = 1e2;

/// Exact closed-form representation of one ladder level.
#[derive(Debug, Clone)]
pub struct FlRep {
    level: u32,
    p: IntPoly,
    q: IntPoly,
}

impl FlRep {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// σ-polynomial multiplying ρ, coefficients low-to-high.
    pub fn p_coefficients(&self) -> &[BigInt] {
        self.p.coeffs()
    }

    /// σ-polynomial multiplying sinh ρ, coefficients low-to-high.
    pub fn q_coefficients(&self) -> &[BigInt] {
        self.q.coeffs()
    }

    /// Coefficients as decimal strings, the debug dump format.
    pub fn p_decimal(&self) -> Vec<String> {
        self.p.coeffs().iter().map(BigInt::to_string).collect()
    }

    pub fn q_decimal(&self) -> Vec<String> {
        self.q.coeffs().iter().map(BigInt::to_string).collect()
    }
}

/// Maclaurin coefficients of `f_l` in ρ (even powers only).
#[derive(Debug, Clone)]
pub struct FlSeries {
    level: u32,
    coeffs: Vec<BigRational>,
}

impl FlSeries {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Coefficients of ρ^0, ρ^2, …, ρ^12.
    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }
}

/// Scaled ladder values at one ρ: `g[l] = f_l/f_1^l` for `1 <= l <= level`.
#[derive(Debug, Clone)]
pub(crate) struct GColumn {
    pub ln_f1: f64,
    g: Vec<f64>,
}

impl GColumn {
    #[inline]
    pub fn g(&self, level: u32) -> f64 {
        self.g[(level - 1) as usize]
    }

    pub fn level_max(&self) -> u32 {
        self.g.len() as u32
    }
}

/// Immutable ladder table: exact representations plus predigested
/// floating-point forms and a synchronized high-precision cache.
pub struct FlTable<F: Real> {
    reps: Vec<FlRep>,
    series: Vec<FlSeries>,
    // f64 predigests (low-to-high); q is stored as |q| after the sign
    // pattern p >= 0 >= q is verified at build time.
    p_f: Vec<Vec<f64>>,
    q_abs_f: Vec<Vec<f64>>,
    g_series_f: Vec<Vec<f64>>,
    f1_series_f: Vec<f64>,
    hp_cache: Mutex<HashMap<(u32, u64), f64>>,
    _scalar: PhantomData<F>,
}

impl<F: Real> FlTable<F> {
    /// Build levels `1..=l_max`. Construction is total for valid `l_max`;
    /// the closed forms are cross-checked against a finite-difference
    /// oracle before the table is returned.
    pub fn build(l_max: u32) -> Result<Self> {
        if !(1..=LEVEL_CAP).contains(&l_max) {
            return Err(Error::Domain {
                name: "l_max",
                value: l_max as f64,
            });
        }

        let mut reps = Vec::with_capacity(l_max as usize);
        let mut p = IntPoly::constant(1);
        let mut q = IntPoly::zero();
        for level in 1..=l_max {
            reps.push(FlRep {
                level,
                p: p.clone(),
                q: q.clone(),
            });
            let l = level as i64;
            let p_next = p
                .mul_x()
                .scale(2 * l - 1)
                .sub(&p.derivative().mul_x2_minus_1());
            let q_next = q
                .mul_x()
                .scale(2 * l - 2)
                .sub(&q.derivative().mul_x2_minus_1())
                .sub(&p);
            p = p_next;
            q = q_next;
        }

        for rep in &reps {
            let l = rep.level as usize;
            if rep.p.degree() != Some(l - 1) {
                return Err(Error::InvariantViolation(format!(
                    "p_{l} must have degree {}",
                    l - 1
                )));
            }
            let q_deg_ok = if l == 1 {
                rep.q.is_zero()
            } else {
                rep.q.degree() == Some(l - 2)
            };
            if !q_deg_ok {
                return Err(Error::InvariantViolation(format!(
                    "q_{l} must have degree {}",
                    l as i64 - 2
                )));
            }
            if rep.p.coeffs().iter().any(Signed::is_negative) {
                return Err(Error::InvariantViolation(format!(
                    "p_{l} has a negative coefficient"
                )));
            }
            if rep.q.coeffs().iter().any(|c| c.is_positive()) {
                return Err(Error::InvariantViolation(format!(
                    "q_{l} has a positive coefficient"
                )));
            }
        }

        let (series, g_series) = build_series(l_max)?;

        let p_f: Vec<Vec<f64>> = reps
            .iter()
            .map(|r| r.p.coeffs().iter().map(bigint_to_f64).collect())
            .collect();
        let q_abs_f: Vec<Vec<f64>> = reps
            .iter()
            .map(|r| {
                r.q.coeffs()
                    .iter()
                    .map(|c| bigint_to_f64(c).abs())
                    .collect()
            })
            .collect();
        if p_f
            .iter()
            .chain(q_abs_f.iter())
            .flatten()
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvariantViolation(
                "closed-form coefficient exceeds f64 range".into(),
            ));
        }
        let g_series_f: Vec<Vec<f64>> = g_series
            .iter()
            .map(|s| s.iter().map(ratio_to_f64).collect())
            .collect();
        let f1_series_f: Vec<f64> = series[0].coeffs.iter().map(ratio_to_f64).collect();

        let table = FlTable {
            reps,
            series,
            p_f,
            q_abs_f,
            g_series_f,
            f1_series_f,
            hp_cache: Mutex::new(HashMap::new()),
            _scalar: PhantomData,
        };
        table.finite_difference_self_check()?;
        Ok(table)
    }

    /// Validate the closed forms against a σ finite difference at a few
    /// well-conditioned points; a mismatch means the recurrence is wrong.
    fn finite_difference_self_check(&self) -> Result<()> {
        let top = self.level_max().saturating_sub(1).min(6);
        let h = 1e-5;
        for l in 1..=top {
            for &rho in &[0.8f64, 1.7] {
                let sigma = rho.cosh();
                let up = self.f_value_f64(l, (sigma + h).acosh())?;
                let down = self.f_value_f64(l, (sigma - h).acosh())?;
                let fd = -(up - down) / (2.0 * h);
                let next = self.f_value_f64(l + 1, rho)?;
                if ((fd - next) / next).abs() > 1e-5 {
                    return Err(Error::InvariantViolation(format!(
                        "ladder recurrence check failed at level {l}, rho {rho}: \
                         finite difference {fd:e} vs closed form {next:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn level_max(&self) -> u32 {
        self.reps.len() as u32
    }

    pub fn reps(&self) -> &[FlRep] {
        &self.reps
    }

    pub fn rep(&self, level: u32) -> Result<&FlRep> {
        self.check_level(level)?;
        Ok(&self.reps[(level - 1) as usize])
    }

    pub fn series(&self, level: u32) -> Result<&FlSeries> {
        self.check_level(level)?;
        Ok(&self.series[(level - 1) as usize])
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level < 1 || level > self.level_max() {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.level_max(),
            });
        }
        Ok(())
    }

    fn check_rho(&self, rho: f64) -> Result<()> {
        if !(0.0..=RHO_MAX).contains(&rho) {
            return Err(Error::Domain {
                name: "rho",
                value: rho,
            });
        }
        Ok(())
    }

    /// `f_l(ρ)`; strictly positive, but may underflow the scalar for large
    /// `l·ρ` (use [`FlTable::eval_ln`] there).
    pub fn eval(&self, level: u32, rho: F) -> Result<F> {
        Ok(self.eval_ln(level, rho)?.exp())
    }

    /// `ln f_l(ρ)`; finite wherever the arguments are in domain.
    pub fn eval_ln(&self, level: u32, rho: F) -> Result<F> {
        let r = rho.to_f64_lossy();
        let g = self.g_f64(level, r)?;
        Ok(F::of(g.ln() + level as f64 * self.ln_f1_f64(r)))
    }

    /// Scaled value `g_l = f_l / f_1^l`; in `f64` range on the whole domain.
    pub fn g(&self, level: u32, rho: F) -> Result<F> {
        Ok(F::of(self.g_f64(level, rho.to_f64_lossy())?))
    }

    /// `ln f_1(ρ)`.
    pub fn ln_f1(&self, rho: F) -> Result<F> {
        let r = rho.to_f64_lossy();
        self.check_rho(r)?;
        Ok(F::of(self.ln_f1_f64(r)))
    }

    /// `f_l(0)` exactly (the σ = 1 limit), converted to the scalar.
    pub fn f_zero(&self, level: u32) -> Result<F> {
        self.check_level(level)?;
        Ok(F::of(ratio_to_f64(
            &self.series[(level - 1) as usize].coeffs[0],
        )))
    }

    fn f_value_f64(&self, level: u32, rho: f64) -> Result<f64> {
        let g = self.g_f64(level, rho)?;
        Ok(g * (level as f64 * self.ln_f1_f64(rho)).exp())
    }

    fn ln_f1_f64(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else if rho < RHO_SWITCH {
            horner_even(&self.f1_series_f, rho).ln()
        } else if rho < 350.0 {
            rho.ln() - rho.sinh().ln()
        } else {
            // ln sinh ρ = ρ - ln 2 + ln(1 - e^{-2ρ})
            rho.ln() - (rho - std::f64::consts::LN_2 + (-(-2.0 * rho).exp()).ln_1p())
        }
    }

    pub(crate) fn g_f64(&self, level: u32, rho: f64) -> Result<f64> {
        self.check_level(level)?;
        self.check_rho(rho)?;
        if level == 1 {
            return Ok(1.0);
        }
        let idx = (level - 1) as usize;
        if rho < RHO_SWITCH {
            return Ok(horner_even(&self.g_series_f[idx], rho));
        }
        let (part_p, part_q) = self.closed_scaled_parts(level, rho);
        let g = part_p - part_q;
        let kappa = (part_p + part_q) / g.abs();
        if g > 0.0 && kappa.is_finite() && kappa <= KAPPA_MAX {
            return Ok(g);
        }
        self.g_hp(level, rho, kappa)
    }

    /// All levels `1..=level` at once; the per-ρ form the grid sweeps use.
    pub(crate) fn g_column(&self, level: u32, rho: f64) -> Result<GColumn> {
        let g = (1..=level)
            .map(|l| self.g_f64(l, rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(GColumn {
            ln_f1: self.ln_f1_f64(rho),
            g,
        })
    }

    /// The two positive halves of the scaled closed form:
    /// `g_l = p(σ)/(s^{l-1} ρ^{l-1}) - |q|(σ)/(s^{l-2} ρ^l)`, each assembled
    /// by a Horner scheme in coth ρ that cannot overflow on the domain.
    fn closed_scaled_parts(&self, level: u32, rho: f64) -> (f64, f64) {
        let idx = (level - 1) as usize;
        let (coth, inv_sinh) = if rho < 300.0 {
            let s = rho.sinh();
            (rho.cosh() / s, 1.0 / s)
        } else {
            let u = (-2.0 * rho).exp();
            (1.0 + 2.0 * u / (1.0 - u), 2.0 * (-rho).exp() / (1.0 - u))
        };
        let part_p = scaled_poly(&self.p_f[idx], coth, inv_sinh) / rho.powi(level as i32 - 1);
        let part_q = if self.q_abs_f[idx].is_empty() {
            0.0
        } else {
            scaled_poly(&self.q_abs_f[idx], coth, inv_sinh) / rho.powi(level as i32)
        };
        (part_p, part_q)
    }

    /// High-precision fallback. The measured f64 cancellation saturates
    /// near 16 digits while the true loss can run past 200, so the scale
    /// starts from the measurement plus the dynamic range of the
    /// denominator and then grows geometrically until two scales agree.
    /// Garbage values at insufficient scales cannot agree to 1e-13, which
    /// makes the agreement test sound.
    fn g_hp(&self, level: u32, rho: f64, kappa: f64) -> Result<f64> {
        let key = (level, rho.to_bits());
        if let Some(&g) = self.hp_cache.lock().unwrap().get(&key) {
            return Ok(g);
        }
        let ln_sinh = if rho < 300.0 {
            rho.sinh().ln()
        } else {
            rho - std::f64::consts::LN_2
        };
        let denom_digits =
            -((level as f64 - 1.0) * ln_sinh + level as f64 * rho.ln()) / std::f64::consts::LN_10;
        let lost = if kappa.is_finite() && kappa > 1.0 {
            kappa.log10()
        } else {
            16.0
        };
        let mut scale = (lost + denom_digits.max(0.0) + 50.0).clamp(60.0, 780.0) as u32;
        let mut prev = self.g_hp_at_scale(level, rho, scale);
        let g = loop {
            let next_scale = scale + (scale / 2).max(40);
            if next_scale > 800 {
                return Err(Error::InvariantViolation(format!(
                    "high-precision ladder evaluation did not stabilize \
                     at level {level}, rho {rho}"
                )));
            }
            let cur = self.g_hp_at_scale(level, rho, next_scale);
            if let (Some(a), Some(b)) = (prev, cur) {
                if b != 0.0 && ((a - b) / b).abs() <= 1e-13 {
                    break b;
                }
            }
            prev = cur;
            scale = next_scale;
        };
        self.hp_cache.lock().unwrap().insert(key, g);
        Ok(g)
    }

    /// One fixed-point evaluation; `None` when the scale cannot even
    /// represent the denominator (a sure sign it is too small).
    fn g_hp_at_scale(&self, level: u32, rho: f64, scale: u32) -> Option<f64> {
        let idx = (level - 1) as usize;
        let r = BigFix::from_f64(rho, scale);
        let e = r.exp();
        let e_inv = BigFix::one(scale).div(&e);
        let sinh = e.sub(&e_inv).div_int(2);
        let cosh = e.add(&e_inv).div_int(2);
        let p_val = poly_eval_fix(self.reps[idx].p.coeffs(), &cosh, scale);
        let q_val = poly_eval_fix(self.reps[idx].q.coeffs(), &cosh, scale);
        let numer = p_val.mul(&r).add(&q_val.mul(&sinh));
        let denom = sinh.powi(level - 1).mul(&r.powi(level));
        if denom.is_zero() {
            return None;
        }
        let g = numer.div(&denom).to_f64();
        g.is_finite().then_some(g)
    }

    /// Closed-form value of `f_l(ρ)` through the high-precision path only;
    /// lets tests compare the series and the closed form independently.
    #[doc(hidden)]
    pub fn eval_closed_form_f64(&self, level: u32, rho: f64) -> Result<f64> {
        self.check_level(level)?;
        self.check_rho(rho)?;
        if rho == 0.0 {
            return Err(Error::Domain {
                name: "rho",
                value: rho,
            });
        }
        let g = self.g_hp(level, rho, f64::INFINITY)?;
        Ok(g * (level as f64 * self.ln_f1_f64(rho)).exp())
    }

    /// Series-path value of `f_l(ρ)` regardless of the switch threshold.
    #[doc(hidden)]
    pub fn eval_series_f64(&self, level: u32, rho: f64) -> Result<f64> {
        self.check_level(level)?;
        let idx = (level - 1) as usize;
        let g = horner_even(&self.g_series_f[idx], rho);
        let f1 = horner_even(&self.f1_series_f, rho);
        Ok(g * f1.powi(level as i32))
    }

    /// Log-convexity of the ladder: `f_{l+2}·f_l - f_{l+1}² >= -tol·f_{l+1}²`
    /// on the given grid, evaluated scale-free through the g-values.
    pub fn check_logconvex(
        &self,
        level: u32,
        rho_grid: &[f64],
        tol_rel: f64,
    ) -> Result<VerificationReport> {
        self.check_level(level + 2)?;
        let mut worst = WorstMin::new();
        for &rho in rho_grid {
            let g_l = self.g_f64(level, rho)?;
            let g_m = self.g_f64(level + 1, rho)?;
            let g_h = self.g_f64(level + 2, rho)?;
            let margin = (g_h * g_l - g_m * g_m) / (g_m * g_m);
            worst.update(margin, Location::Ladder { l: level, rho });
        }
        Ok(VerificationReport {
            check_name: format!("fl-log-convexity-l{level}"),
            grid: GridSpec::new(vec![Axis::list("rho", rho_grid)]),
            worst_value: worst.value,
            worst_location: worst.location,
            tolerance: tol_rel,
            pass: worst.value >= -tol_rel,
        })
    }
}

/// `Σ a_k coth^k / s^(deg - k)` via a Horner scheme; equals `p(σ)/s^deg`.
fn scaled_poly(coeffs: &[f64], coth: f64, inv_sinh: f64) -> f64 {
    let deg = coeffs.len() - 1;
    let mut inv_pows = Vec::with_capacity(deg + 1);
    let mut w = 1.0;
    for _ in 0..=deg {
        inv_pows.push(w);
        w *= inv_sinh;
    }
    let mut acc = coeffs[deg];
    for k in (0..deg).rev() {
        acc = acc * coth + coeffs[k] * inv_pows[deg - k];
    }
    acc
}

/// Horner evaluation of an even series (coefficients of ρ^0, ρ², …).
fn horner_even(coeffs: &[f64], rho: f64) -> f64 {
    let x = rho * rho;
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn poly_eval_fix(coeffs: &[BigInt], x: &BigFix, scale: u32) -> BigFix {
    let Some(top) = coeffs.last() else {
        return BigFix::zero(scale);
    };
    let mut acc = BigFix::from_bigint(top, scale);
    for c in coeffs.iter().rev().skip(1) {
        acc = acc.mul(x).add(&BigFix::from_bigint(c, scale));
    }
    acc
}

/// Accurate BigRational → f64 (numerator/denominator may exceed f64 range).
pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    BigFix::from_ratio(r, 25).to_f64()
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}

/// Maclaurin ladders: per level the f-series (stored through ρ^12) and the
/// scaled g-series `f_l/f_1^l` (used by evaluation), both exact.
///
/// In `x = ρ²`: `sinh ρ / ρ = Σ x^j/(2j+1)!`, `f_1 = 1/(sinh ρ/ρ)`, and the
/// ladder step `f_{l+1} = -(df_l/dρ)/ρ / (sinh ρ/ρ)` costs one x-order, so
/// level 1 starts with `SERIES_ORDER + l_max` terms.
#[allow(clippy::type_complexity)]
fn build_series(l_max: u32) -> Result<(Vec<FlSeries>, Vec<Vec<BigRational>>)> {
    let len0 = SERIES_ORDER + l_max as usize;
    let keep = SERIES_ORDER + 1;

    // g_j = 1/(2j+1)!
    let mut sinh_over_rho = Vec::with_capacity(len0);
    let mut fact = BigInt::one();
    let mut k = BigInt::one();
    for j in 0..len0 {
        if j > 0 {
            k += 1;
            fact *= &k;
            k += 1;
            fact *= &k;
        }
        sinh_over_rho.push(BigRational::new(BigInt::one(), fact.clone()));
    }

    // f_1 = 1 / (sinh ρ/ρ)
    let mut level = vec![BigRational::zero(); len0];
    level[0] = BigRational::one();
    for i in 1..len0 {
        let mut acc = BigRational::zero();
        for j in 1..=i {
            acc += &sinh_over_rho[j] * &level[i - j];
        }
        level[i] = -acc;
    }
    let f1 = level.clone();

    let mut f_series = Vec::with_capacity(l_max as usize);
    let mut g_series = Vec::with_capacity(l_max as usize);
    let mut f1_pow = f1.clone();
    f_series.push(FlSeries {
        level: 1,
        coeffs: level.iter().take(keep).cloned().collect(),
    });
    g_series.push(vec![BigRational::one()]);

    for l in 2..=l_max {
        let next_len = level.len() - 1;
        if next_len < keep {
            return Err(Error::InvariantViolation(
                "series guard length exhausted".into(),
            ));
        }
        // c_k = 2(k+1)·a_{k+1} are the coefficients of (df/dρ)/ρ.
        let mut next = vec![BigRational::zero(); next_len];
        for i in 0..next_len {
            let c = BigRational::from(BigInt::from(2 * (i as i64 + 1))) * &level[i + 1];
            let mut acc = -c;
            for j in 1..=i {
                acc -= &sinh_over_rho[j] * &next[i - j];
            }
            next[i] = acc;
        }
        level = next;
        f_series.push(FlSeries {
            level: l,
            coeffs: level.iter().take(keep).cloned().collect(),
        });

        f1_pow = series_mul_trunc(&f1_pow, &f1, keep);
        g_series.push(series_div_trunc(
            &level[..keep.min(level.len())],
            &f1_pow,
            keep,
        ));
    }

    Ok((f_series, g_series))
}

fn series_mul_trunc(a: &[BigRational], b: &[BigRational], keep: usize) -> Vec<BigRational> {
    let n = keep.min(a.len() + b.len() - 1);
    let mut out = vec![BigRational::zero(); n];
    for (i, ai) in a.iter().enumerate().take(n) {
        for (j, bj) in b.iter().enumerate() {
            if i + j >= n {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Solve `q·b = a` for the leading `keep` coefficients (`b_0 != 0`).
fn series_div_trunc(a: &[BigRational], b: &[BigRational], keep: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); keep];
    for i in 0..keep {
        let mut acc = if i < a.len() {
            a[i].clone()
        } else {
            BigRational::zero()
        };
        for j in 1..=i.min(b.len() - 1) {
            acc -= &b[j] * &out[i - j];
        }
        out[i] = acc / &b[0];
    }
    out
}
