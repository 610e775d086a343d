//! The kernel correction factor `α_n(t,ρ)`.
//!
//! For odd `n = 2m+1`, `α_n = Σ_{i=0}^{m-1} t^i P_{m,i}(f_1,…,f_m)` where
//! the `P_{m,i}` have strictly positive integer coefficients. The factor is
//! built exactly from `α_1 = 1` by the recurrence
//! `α_n = f_1·α_{n-2} - 2t·∂α_{n-2}/∂σ`, with σ-differentiation acting
//! monomial-by-monomial through `∂f_l/∂σ = -f_{l+1}`.
//!
//! Every monomial of `α_{2m+1}` has weighted degree `Σ l·j_l = m`, and more
//! generally every expansion produced here is weight-homogeneous. Numeric
//! evaluation exploits this: with `g_l = f_l/f_1^l`, a weight-`w` expansion
//! equals `f_1^w · Σ c·t^i·Π g_l^{j_l}`, and the scaled sum stays inside
//! `f64` range on the whole evaluation domain while the expansion itself
//! may not.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Result;
use crate::error::Error;
use crate::grid::GridSpec;
use crate::logval::LogVal;
use crate::radial_basis::{FlTable, GColumn};
use crate::real::Real;
use crate::report::{Location, VerificationReport};

/// Default ladder budget: enough to differentiate `α_n` twice for every
/// dimension the verification grids use, with headroom.
pub const DEFAULT_LEVEL_BUDGET: u32 = 64;

/// A product `Π f_l^{j_l}`, stored sparse with exponents >= 1 and levels
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    factors: Vec<(u32, u32)>,
}

impl Monomial {
    /// The empty product.
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(level: u32, exp: u32) -> Self {
        assert!(level >= 1);
        if exp == 0 {
            return Self::one();
        }
        Monomial {
            factors: vec![(level, exp)],
        }
    }

    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Weighted degree `Σ l·j_l`.
    pub fn weight(&self) -> u32 {
        self.factors.iter().map(|&(l, j)| l * j).sum()
    }

    pub fn max_level(&self) -> u32 {
        self.factors.last().map_or(0, |&(l, _)| l)
    }

    pub fn exponent_of(&self, level: u32) -> u32 {
        self.factors
            .iter()
            .find(|&&(l, _)| l == level)
            .map_or(0, |&(_, j)| j)
    }

    /// Adjust the exponent of one level by `delta` (result must stay >= 0).
    fn shift(&self, level: u32, delta: i64) -> Monomial {
        let mut factors = self.factors.clone();
        match factors.binary_search_by_key(&level, |&(l, _)| l) {
            Ok(pos) => {
                let next = factors[pos].1 as i64 + delta;
                assert!(next >= 0, "negative exponent");
                if next == 0 {
                    factors.remove(pos);
                } else {
                    factors[pos].1 = next as u32;
                }
            }
            Err(pos) => {
                assert!(delta >= 0, "negative exponent");
                if delta > 0 {
                    factors.insert(pos, (level, delta as u32));
                }
            }
        }
        Monomial { factors }
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for &(l, j) in &other.factors {
            out = out.shift(l, j as i64);
        }
        out
    }
}

/// Sparse expansion `Σ c·t^i·Π f_l^{j_l}` with exact integer coefficients
/// of either sign. [`AlphaPoly`] wraps the positive-coefficient case.
#[derive(Debug, Clone, Default)]
pub struct Expansion {
    terms: BTreeMap<(u32, Monomial), BigInt>,
}

impl Expansion {
    pub fn zero() -> Self {
        Expansion::default()
    }

    pub fn constant(c: i64) -> Self {
        let mut e = Expansion::zero();
        e.add_term(0, Monomial::one(), BigInt::from(c));
        e
    }

    pub fn add_term(&mut self, t_pow: u32, mono: Monomial, coeff: BigInt) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry((t_pow, mono)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Monomial, &BigInt)> {
        self.terms.iter().map(|((i, m), c)| (*i, m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_level(&self) -> u32 {
        self.terms
            .keys()
            .map(|(_, m)| m.max_level())
            .max()
            .unwrap_or(0)
    }

    /// Weighted degree if the expansion is homogeneous, else `None`.
    pub fn homogeneous_weight(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|(_, m)| m.weight());
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    pub fn scale(&self, k: i64) -> Expansion {
        if k == 0 {
            return Expansion::zero();
        }
        let k = BigInt::from(k);
        Expansion {
            terms: self
                .terms
                .iter()
                .map(|(key, c)| (key.clone(), c * &k))
                .collect(),
        }
    }

    pub fn add(&self, other: &Expansion) -> Expansion {
        let mut out = self.clone();
        for ((i, m), c) in &other.terms {
            out.add_term(*i, m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Expansion) -> Expansion {
        self.add(&other.scale(-1))
    }

    pub fn mul(&self, other: &Expansion) -> Expansion {
        let mut out = Expansion::zero();
        for ((i1, m1), c1) in &self.terms {
            for ((i2, m2), c2) in &other.terms {
                out.add_term(i1 + i2, m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    /// Multiply by `f_1`.
    pub fn mul_f1(&self) -> Expansion {
        Expansion {
            terms: self
                .terms
                .iter()
                .map(|((i, m), c)| ((*i, m.shift(1, 1)), c.clone()))
                .collect(),
        }
    }

    /// Exact `∂/∂σ` via `∂f_l/∂σ = -f_{l+1}`, term by term.
    pub fn diff_sigma(&self, level_budget: u32) -> Result<Expansion> {
        let mut out = Expansion::zero();
        for ((i, mono), coeff) in &self.terms {
            for &(l, j) in mono.factors() {
                if l + 1 > level_budget {
                    return Err(Error::LadderOverflow {
                        level: l + 1,
                        budget: level_budget,
                    });
                }
                let new_mono = mono.shift(l, -1).shift(l + 1, 1);
                out.add_term(*i, new_mono, coeff * (-BigInt::from(j)));
            }
        }
        Ok(out)
    }

    /// Exact `∂/∂t`, shifting t-powers down.
    pub fn diff_t(&self) -> Expansion {
        let mut out = Expansion::zero();
        for ((i, mono), coeff) in &self.terms {
            if *i >= 1 {
                out.add_term(i - 1, mono.clone(), coeff * BigInt::from(*i));
            }
        }
        out
    }

    /// Numeric evaluation `Σ c·t^i·Π f_l^{j_l}`. For `AlphaPoly`-shaped
    /// inputs the result is strictly positive.
    pub fn eval<F: Real>(&self, table: &FlTable<F>, t: F, rho: F) -> Result<F> {
        Ok(self.eval_log(table, t, rho)?.value())
    }

    /// Log-domain evaluation, safe against under/overflow.
    pub fn eval_log<F: Real>(&self, table: &FlTable<F>, t: F, rho: F) -> Result<LogVal<F>> {
        if t <= F::zero() {
            return Err(Error::Domain {
                name: "t",
                value: t.to_f64_lossy(),
            });
        }
        let form = EvalForm::new(self)?;
        let col = table.g_column(form.min_levels().max(1), rho.to_f64_lossy())?;
        Ok(form.eval_log(&col, t))
    }
}

/// Flattened, f64-digested form of a weight-homogeneous expansion.
#[derive(Debug, Clone)]
pub(crate) struct EvalForm {
    weight: u32,
    max_t_pow: u32,
    max_level: u32,
    terms: Vec<EvalTerm>,
}

#[derive(Debug, Clone)]
struct EvalTerm {
    t_pow: u32,
    factors: Vec<(u32, i32)>,
    coeff: f64,
}

/// Scaled sum of an expansion at one point plus the magnitude sum that
/// calibrates rounding-slack tolerances.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SumParts<F: Real> {
    pub sum: F,
    pub abs_sum: F,
}

impl EvalForm {
    pub fn new(expansion: &Expansion) -> Result<Self> {
        if expansion.homogeneous_weight().is_none() && !expansion.is_zero() {
            return Err(Error::InvariantViolation(
                "expansion is not weight-homogeneous".into(),
            ));
        }
        let weight = expansion.homogeneous_weight().unwrap_or(0);
        let mut terms = Vec::with_capacity(expansion.num_terms());
        let mut max_t_pow = 0;
        let mut max_level = 0;
        for (i, mono, coeff) in expansion.terms() {
            let coeff = coeff.to_f64().unwrap_or(f64::INFINITY);
            if !coeff.is_finite() {
                return Err(Error::InvariantViolation(
                    "expansion coefficient exceeds f64 range".into(),
                ));
            }
            max_t_pow = max_t_pow.max(i);
            max_level = max_level.max(mono.max_level());
            terms.push(EvalTerm {
                t_pow: i,
                factors: mono.factors().iter().map(|&(l, j)| (l, j as i32)).collect(),
                coeff,
            });
        }
        Ok(EvalForm {
            weight,
            max_t_pow,
            max_level,
            terms,
        })
    }

    pub fn min_levels(&self) -> u32 {
        self.max_level
    }

    /// Scaled sum `S = Σ c·t^i·Π g_l^{j_l}`, so the expansion value is
    /// `f_1^w · S`.
    pub fn eval_parts<F: Real>(&self, col: &GColumn, t: F) -> SumParts<F> {
        debug_assert!(col.level_max() >= self.max_level);
        let mut t_pows = Vec::with_capacity(self.max_t_pow as usize + 1);
        let mut tp = F::one();
        for _ in 0..=self.max_t_pow {
            t_pows.push(tp);
            tp *= t;
        }
        let mut sum = F::zero();
        let mut abs_sum = F::zero();
        for term in &self.terms {
            let mut v = F::of(term.coeff) * t_pows[term.t_pow as usize];
            for &(l, j) in &term.factors {
                v *= F::of(col.g(l)).powi(j);
            }
            sum += v;
            abs_sum += v.abs();
        }
        SumParts { sum, abs_sum }
    }

    pub fn eval_log<F: Real>(&self, col: &GColumn, t: F) -> LogVal<F> {
        let parts = self.eval_parts(col, t);
        if parts.sum == F::zero() {
            return LogVal::zero();
        }
        let ln = F::of(self.weight as f64 * col.ln_f1) + parts.sum.abs().ln();
        LogVal {
            sign: if parts.sum > F::zero() { 1 } else { -1 },
            ln,
        }
    }
}

/// `α_{2m+1}` with the positivity and shape invariants enforced.
#[derive(Debug)]
pub struct AlphaPoly {
    m: u32,
    expansion: Expansion,
    form: OnceLock<EvalForm>,
}

impl AlphaPoly {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        2 * self.m + 1
    }

    pub fn expansion(&self) -> &Expansion {
        &self.expansion
    }

    pub(crate) fn form(&self) -> &EvalForm {
        self.form
            .get_or_init(|| EvalForm::new(&self.expansion).expect("alpha is homogeneous"))
    }

    /// The pure f-polynomial `P_{m,i}` (t-power `i` slice, t dropped).
    pub fn t_slice(&self, i: u32) -> Expansion {
        let mut out = Expansion::zero();
        for (tp, mono, coeff) in self.expansion.terms() {
            if tp == i {
                out.add_term(0, mono.clone(), coeff.clone());
            }
        }
        out
    }

    /// Strictly positive numeric value.
    pub fn eval<F: Real>(&self, table: &FlTable<F>, t: F, rho: F) -> Result<F> {
        self.expansion.eval(table, t, rho)
    }

    /// Shape checks: positive coefficients, `P_{m,0} = f_1^m`,
    /// `P_{m,m-1} = 2^{m-1}·f_m`, highest ladder level `m`, t-powers
    /// within `0..=m-1`.
    pub fn structure_check(&self) -> VerificationReport {
        let mut violations = 0u32;
        if self.expansion.terms().any(|(_, _, c)| !c.is_positive()) {
            violations += 1;
        }
        if self.m >= 1 {
            let mut low = Expansion::zero();
            low.add_term(0, Monomial::var(1, self.m), BigInt::one());
            if !expansions_equal(&self.t_slice(0), &low) {
                violations += 1;
            }
            let mut high = Expansion::zero();
            high.add_term(0, Monomial::var(self.m, 1), BigInt::from(2).pow(self.m - 1));
            if !expansions_equal(&self.t_slice(self.m - 1), &high) {
                violations += 1;
            }
            if self.expansion.max_level() != self.m {
                violations += 1;
            }
            if self.expansion.terms().any(|(i, _, _)| i > self.m - 1) {
                violations += 1;
            }
        }
        VerificationReport {
            check_name: format!("alpha-structure-n{}", self.n()),
            grid: GridSpec::default(),
            worst_value: violations as f64,
            worst_location: Location::Structure { m: self.m },
            tolerance: 0.0,
            pass: violations == 0,
        }
    }

    /// One line of LaTeX, e.g. `α_7 = f_1^3 + 6 t f_1 f_2 + 4 t^2 f_3`.
    pub fn to_latex(&self) -> String {
        if self.expansion.is_zero() {
            return format!("α_{} = 0", self.n());
        }
        let mut parts = Vec::new();
        for (i, mono, coeff) in self.expansion.terms() {
            let mut factors = Vec::new();
            if !coeff.is_one() || (i == 0 && mono.is_one()) {
                factors.push(coeff.to_string());
            }
            match i {
                0 => {}
                1 => factors.push("t".to_string()),
                _ => factors.push(format!("t^{i}")),
            }
            for &(l, j) in mono.factors() {
                if j == 1 {
                    factors.push(format!("f_{l}"));
                } else {
                    factors.push(format!("f_{l}^{j}"));
                }
            }
            parts.push(factors.join(" "));
        }
        format!("α_{} = {}", self.n(), parts.join(" + "))
    }

    /// JSON dump: t-power → list of `{exponents, coefficient}` with the
    /// coefficient as a decimal string.
    pub fn to_json(&self) -> serde_json::Value {
        let mut by_power: BTreeMap<String, Vec<serde_json::Value>> = BTreeMap::new();
        for (i, mono, coeff) in self.expansion.terms() {
            let exponents: serde_json::Map<String, serde_json::Value> = mono
                .factors()
                .iter()
                .map(|&(l, j)| (l.to_string(), serde_json::json!(j)))
                .collect();
            by_power
                .entry(i.to_string())
                .or_default()
                .push(serde_json::json!({
                    "exponents": exponents,
                    "coefficient": coeff.to_string(),
                }));
        }
        serde_json::json!({ "n": self.n(), "m": self.m, "terms": by_power })
    }
}

fn expansions_equal(a: &Expansion, b: &Expansion) -> bool {
    a.num_terms() == b.num_terms()
        && a.terms()
            .zip(b.terms())
            .all(|((i1, m1, c1), (i2, m2, c2))| i1 == i2 && m1 == m2 && c1 == c2)
}

static MEMO: OnceLock<Mutex<HashMap<u32, Arc<AlphaPoly>>>> = OnceLock::new();

/// Build (or fetch) the exact expansion of `α_n` for odd `n`.
///
/// Instances are memoized per `n` for the whole process: concurrent readers,
/// serialized first build. The recurrence can only produce positive
/// coefficients; a negative one would falsify the nonnegativity of the
/// `P_{m,i}` and aborts construction.
pub fn build_alpha(n: u32) -> Result<Arc<AlphaPoly>> {
    if n % 2 == 0 || n < 1 {
        return Err(Error::EvenDimension(n));
    }
    if n > 2 * DEFAULT_LEVEL_BUDGET + 1 {
        return Err(Error::DimensionBudget {
            n,
            budget: DEFAULT_LEVEL_BUDGET,
        });
    }
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    let mut memo = memo.lock().unwrap();
    if let Some(hit) = memo.get(&n) {
        return Ok(hit.clone());
    }

    let mut k = memo.keys().copied().filter(|&k| k < n).max().unwrap_or(0);
    let mut current = if k == 0 {
        k = 1;
        let alpha1 = Arc::new(AlphaPoly {
            m: 0,
            expansion: Expansion::constant(1),
            form: OnceLock::new(),
        });
        memo.insert(1, alpha1.clone());
        alpha1
    } else {
        memo[&k].clone()
    };

    while k < n {
        k += 2;
        let m = (k - 1) / 2;
        let derivative = current.expansion.diff_sigma(DEFAULT_LEVEL_BUDGET)?;
        let mut shifted = Expansion::zero();
        for (i, mono, coeff) in derivative.terms() {
            shifted.add_term(i + 1, mono.clone(), coeff * BigInt::from(-2));
        }
        let expansion = current.expansion.mul_f1().add(&shifted);
        if expansion.terms().any(|(_, _, c)| !c.is_positive()) {
            return Err(Error::InvariantViolation(format!(
                "alpha_{k} produced a nonpositive coefficient; this contradicts \
                 the nonnegativity of the P_(m,i)"
            )));
        }
        let next = Arc::new(AlphaPoly {
            m,
            expansion,
            form: OnceLock::new(),
        });
        memo.insert(k, next.clone());
        current = next;
    }
    Ok(current)
}
