//! Geodesic-sphere mean curvature flows in `H^{n+1}` and the weighted
//! volume `F(t) = ∫_{Σ_t} K_n(t₀-t, dist(·,p₀)) dVol`.
//!
//! A geodesic n-sphere of radius `r` in `H^{n+1}` has mean curvature
//! `n·coth r`, so the flow radius obeys `r' = -n·coth r`, i.e.
//! `cosh r(t) = cosh r(0)·e^{-nt}` in closed form, with extinction at
//! `t* = ln(cosh r₀)/n`. A fixed-step RK4 integrator provides the
//! independent oracle for the closed form.
//!
//! The functional is non-increasing along any such flow and is constant on
//! a totally geodesic plane through `p₀` (a minimal cone over `p₀`), where
//! it reduces to the kernel normalization.

use crate::Result;
use crate::error::Error;
use crate::kernel::{KernelEngine, QuadSpec, hyperbolic_offset_distance, sphere_area};
use crate::quadrature::GaussLegendre;
use crate::real::Real;

/// Sampling gap before the window end; kernel time and radius both
/// degenerate there and slopes turn stiff.
pub const END_GAP: f64 = 1e-4;

/// Radius-vs-time state of a geodesic-sphere flow in `H^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFlowState<F: Real> {
    /// Dimension of the evolving sphere Σ.
    pub n: u32,
    pub r: F,
    pub time: F,
}

impl<F: Real> SphereFlowState<F> {
    /// State of the flow started at radius `r0`, evolved to `time`.
    pub fn at(n: u32, r0: F, time: F) -> crate::Result<Self> {
        Ok(SphereFlowState {
            n,
            r: sphere_radius(n, r0, time)?,
            time,
        })
    }
}

/// One sample of the weighted volume along a flow.
#[derive(Debug, Clone, Copy)]
pub struct WeightedVolumeSample<F: Real> {
    pub time: F,
    pub f: F,
    /// Centered finite difference (one-sided at the window ends).
    pub df_estimate: F,
}

/// Extinction time `t* = ln(cosh r₀)/n`.
pub fn extinction_time<F: Real>(n: u32, r0: F) -> F {
    ln_cosh(r0) / F::of(n as f64)
}

/// Closed-form flow radius: `cosh r = cosh(r₀)·e^{-n·time}`, assembled as
/// `expm1` + `arccosh(1+w)` so near-extinction radii keep full precision.
pub fn sphere_radius<F: Real>(n: u32, r0: F, time: F) -> Result<F> {
    check_positive("r0", r0)?;
    if time < F::zero() {
        return Err(Error::Domain {
            name: "time",
            value: time.to_f64_lossy(),
        });
    }
    let w = (ln_cosh(r0) - F::of(n as f64) * time).exp_m1();
    if w <= F::zero() {
        return Err(Error::ExtinctFlow {
            time: time.to_f64_lossy(),
            t_star: extinction_time(n, r0).to_f64_lossy(),
        });
    }
    Ok(acosh_1p(w))
}

/// Fixed-step classical RK4 on `r' = -n·coth r`; the independent oracle for
/// [`sphere_radius`]. Halts with an error if the trajectory leaves the
/// valid range (radius below 1e-3) or if the step is unstable (radius
/// growing).
pub fn rk4_sphere_radius<F: Real>(n: u32, r0: F, time: F, step: F) -> Result<F> {
    check_positive("r0", r0)?;
    check_positive("step", step)?;
    if time < F::zero() {
        return Err(Error::Domain {
            name: "time",
            value: time.to_f64_lossy(),
        });
    }
    let nf = F::of(n as f64);
    let slope = |r: F| -> Result<F> {
        if r <= F::zero() {
            return Err(Error::UnstableStep {
                step: step.to_f64_lossy(),
            });
        }
        Ok(-nf * r.cosh() / r.sinh())
    };
    if time == F::zero() {
        return Ok(r0);
    }
    // uniform substeps; a trailing remainder step can shrink below the
    // rounding floor and fake instability
    let steps = (time / step).to_f64_lossy().ceil().max(1.0) as u64;
    let h = time / F::of(steps as f64);
    let mut r = r0;
    let floor = F::of(1e-3);
    for _ in 0..steps {
        let k1 = slope(r)?;
        let k2 = slope(r + h * F::of(0.5) * k1)?;
        let k3 = slope(r + h * F::of(0.5) * k2)?;
        let k4 = slope(r + h * k3)?;
        let next = r + h / F::of(6.0) * (k1 + F::of(2.0) * (k2 + k3) + k4);
        if next >= r {
            return Err(Error::UnstableStep {
                step: step.to_f64_lossy(),
            });
        }
        if next < floor {
            return Err(Error::ExtinctFlow {
                time: time.to_f64_lossy(),
                t_star: extinction_time(n, r0).to_f64_lossy(),
            });
        }
        r = next;
    }
    Ok(r)
}

/// Weighted volume with `p₀` at the sphere center: the distance is
/// constant on Σ, so `F = ω_n·sinh^n(r)·K_n(τ, r)` exactly.
pub fn weighted_volume_centered<F: Real>(
    engine: &KernelEngine<F>,
    n: u32,
    r: F,
    tau: F,
) -> Result<F> {
    check_positive("r", r)?;
    let eval = engine.log_kernel(n, tau, r)?;
    let ln = F::of(sphere_area(n).ln()) + F::of(n as f64) * r.sinh().ln() + eval.log_k;
    Ok(ln.exp())
}

/// Weighted volume with `p₀` offset a distance `d` from the center:
/// `ω_{n-1}·sinh^n(r)·∫_0^π K_n(τ, ρ(θ))·sin^{n-1}θ dθ` with
/// `cosh ρ(θ) = cosh d·cosh r - sinh d·sinh r·cos θ`.
///
/// Note `r` and `d` do not play symmetric roles: the distance law is
/// symmetric, but the measure lives on the sphere of radius `r`.
pub fn weighted_volume_offset<F: Real>(
    engine: &KernelEngine<F>,
    n: u32,
    r: F,
    tau: F,
    d: F,
    quad_order: u32,
) -> Result<F> {
    check_positive("r", r)?;
    if d < F::zero() {
        return Err(Error::Domain {
            name: "d",
            value: d.to_f64_lossy(),
        });
    }
    if quad_order < 8 {
        return Err(Error::QuadratureOrder(quad_order));
    }
    let rule: GaussLegendre<F> = GaussLegendre::new(quad_order as usize);
    let nf = F::of(n as f64);
    // factor sinh^n r and ω_{n-1} in log form; the θ-integrand stays O(1)
    let mut failure = None;
    let integral = rule.integrate(F::zero(), F::PI(), |theta| {
        let dist = hyperbolic_offset_distance(r, d, theta);
        match engine.log_kernel(n, tau, dist) {
            Ok(eval) => eval.log_k.exp() * theta.sin().powi(n as i32 - 1),
            Err(e) => {
                failure = Some(e);
                F::zero()
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let ln_pref = F::of(sphere_area(n - 1).ln()) + nf * r.sinh().ln();
    Ok(ln_pref.exp() * integral)
}

/// Sample `F(t)` along a sphere flow at `samples` uniform times in
/// `(0, min(t₀, t*) - ε)` and attach finite-difference slopes. The flow
/// going extinct before `t₀` only truncates the window.
pub fn monotonicity_scan<F: Real>(
    engine: &KernelEngine<F>,
    n: u32,
    r0: F,
    t0: F,
    d: F,
    samples: usize,
) -> Result<Vec<WeightedVolumeSample<F>>> {
    if samples < 10 {
        return Err(Error::Usage(format!(
            "need at least 10 samples, got {samples}"
        )));
    }
    check_positive("t0", t0)?;
    check_positive("r0", r0)?;
    let t_star = extinction_time(n, r0);
    let end = t0.min(t_star) - F::of(END_GAP);
    if end <= F::zero() {
        return Err(Error::Domain {
            name: "t0",
            value: t0.to_f64_lossy(),
        });
    }
    let h = end / F::of(samples as f64 + 1.0);
    let mut times = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for j in 1..=samples {
        let state = SphereFlowState::at(n, r0, h * F::of(j as f64))?;
        let tau = t0 - state.time;
        let f = if d == F::zero() {
            weighted_volume_centered(engine, n, state.r, tau)?
        } else {
            weighted_volume_offset(engine, n, state.r, tau, d, 64)?
        };
        times.push(state.time);
        values.push(f);
    }
    let two_h = F::of(2.0) * h;
    let slopes: Vec<F> = (0..samples)
        .map(|j| {
            if j == 0 {
                (values[1] - values[0]) / h
            } else if j == samples - 1 {
                (values[j] - values[j - 1]) / h
            } else {
                (values[j + 1] - values[j - 1]) / two_h
            }
        })
        .collect();
    Ok(times
        .into_iter()
        .zip(values)
        .zip(slopes)
        .map(|((time, f), df_estimate)| WeightedVolumeSample {
            time,
            f,
            df_estimate,
        })
        .collect())
}

/// Largest slope in a scan; the monotonicity claim is that it is negative.
pub fn max_slope<F: Real>(samples: &[WeightedVolumeSample<F>]) -> F {
    samples
        .iter()
        .map(|s| s.df_estimate)
        .fold(F::neg_infinity(), F::max)
}

/// The equality case: on a totally geodesic `H^n` through `p₀` the
/// functional is the kernel mass, identically 1 for every `τ`.
pub fn geodesic_plane_functional<F: Real>(engine: &KernelEngine<F>, n: u32, tau: F) -> Result<F> {
    engine.normalization(n, tau, QuadSpec::default())
}

/// CSV serialization: `time,F,dF_estimate`, one row per sample, 17
/// significant digits so parsing reproduces the values bit-identically.
pub fn scan_to_csv<F: Real>(samples: &[WeightedVolumeSample<F>]) -> String {
    let mut out = String::from("time,F,dF_estimate\n");
    for s in samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            s.time, s.f, s.df_estimate
        ));
    }
    out
}

fn check_positive<F: Real>(name: &'static str, value: F) -> Result<()> {
    if value <= F::zero() || !value.is_finite() {
        return Err(Error::Domain {
            name,
            value: value.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `ln cosh x`, stable for large x.
fn ln_cosh<F: Real>(x: F) -> F {
    let a = x.abs();
    a + (-F::of(2.0) * a).exp().ln_1p() - F::of(std::f64::consts::LN_2)
}

/// `arccosh(1 + w)` for `w >= 0` without cancellation near zero.
fn acosh_1p<F: Real>(w: F) -> F {
    (w + (w * (w + F::of(2.0))).sqrt()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn engine() -> &'static KernelEngine<f64> {
        static ENGINE: OnceLock<KernelEngine<f64>> = OnceLock::new();
        ENGINE.get_or_init(|| KernelEngine::new(16).unwrap())
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs())
    }

    #[test]
    fn flow_state_tracks_invariant() {
        // cosh r(time) = cosh r(0) · e^{-n·time}
        let s = SphereFlowState::at(2, 2.0f64, 0.3).unwrap();
        let lhs = s.r.cosh();
        let rhs = 2f64.cosh() * (-2.0 * 0.3f64).exp();
        assert!((lhs - rhs).abs() < 1e-14 * rhs);
        assert_eq!(s.time, 0.3);
    }

    #[test]
    fn radius_examples() {
        assert_eq!(sphere_radius(2, 2.0, 0.0).unwrap(), 2.0);
        let t_star: f64 = extinction_time(2, 2.0);
        assert!((t_star - (2f64.cosh().ln() / 2.0)).abs() < 1e-15);
        assert!((t_star - 0.66250).abs() < 5e-6);
        assert!(matches!(
            sphere_radius(2, 2.0, t_star),
            Err(Error::ExtinctFlow { .. })
        ));
        let r = sphere_radius(1, 1.0, 0.1).unwrap();
        assert!(close(r, (1f64.cosh() * (-0.1f64).exp()).acosh(), 1e-14));
    }

    #[test]
    fn rk4_agrees_with_closed_form() {
        for &(n, r0, time) in &[(2u32, 2.0f64, 0.3f64), (1, 1.0, 0.1), (3, 2.5, 0.25)] {
            let exact = sphere_radius(n, r0, time).unwrap();
            let rk = rk4_sphere_radius(n, r0, time, 1e-4).unwrap();
            assert!((exact - rk).abs() <= 1e-8, "n={n} r0={r0}: {exact} vs {rk}");
        }
    }

    #[test]
    fn rk4_agreement_random_flows() {
        let mut state = 0x5deece66du64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let dims = [1u32, 2, 3, 5];
        for k in 0..50 {
            let n = dims[k % 4];
            let r0 = 0.5 + 2.5 * next();
            let t_star: f64 = extinction_time(n, r0);
            let time = 0.8 * t_star * next();
            if time <= 0.0 {
                continue;
            }
            let exact = sphere_radius(n, r0, time).unwrap();
            let rk = rk4_sphere_radius(n, r0, time, 1e-4).unwrap();
            assert!((exact - rk).abs() <= 1e-8, "n={n} r0={r0} t={time}");
        }
    }

    #[test]
    fn rk4_detects_bad_step() {
        assert!(matches!(
            rk4_sphere_radius(3, 0.4f64, 0.3, 0.5),
            Err(Error::UnstableStep { .. } | Error::ExtinctFlow { .. })
        ));
    }

    #[test]
    fn centered_volume_shrinks_with_radius() {
        let e = engine();
        let small = weighted_volume_centered(e, 1, 1e-6, 1.0).unwrap();
        assert!(small < 1e-5);
        let v = weighted_volume_centered(e, 3, 1.0, 1.0).unwrap();
        let expect = sphere_area(3) * 1f64.sinh().powi(3) * e.log_kernel(3, 1.0, 1.0).unwrap().k();
        assert!(close(v, expect, 1e-13));
        // frozen regression value
        assert!(close(v, 1.753_360_790_502_394_6e-1, 1e-12));
    }

    #[test]
    fn offset_reduces_to_centered() {
        let e = engine();
        let centered = weighted_volume_centered(e, 3, 1.0, 1.0).unwrap();
        let offset = weighted_volume_offset(e, 3, 1.0, 1.0, 0.0, 64).unwrap();
        assert!(close(offset, centered, 1e-10), "{offset:e} vs {centered:e}");
    }

    #[test]
    fn offset_order_convergence() {
        let e = engine();
        let lo = weighted_volume_offset(e, 3, 1.0, 1.0, 0.5, 64).unwrap();
        let hi = weighted_volume_offset(e, 3, 1.0, 1.0, 0.5, 128).unwrap();
        assert!(close(lo, hi, 1e-10));
        assert!(matches!(
            weighted_volume_offset(e, 3, 1.0, 1.0, 0.5, 7),
            Err(Error::QuadratureOrder(7))
        ));
    }

    #[test]
    fn scans_decrease() {
        let e = engine();
        for &(n, r0, t0, d) in &[
            (3u32, 2.0, 0.2, 0.0),
            (3, 2.0, 0.2, 1.0),
            (1, 1.0, 0.1, 0.0),
        ] {
            let scan = monotonicity_scan(e, n, r0, t0, d, 30).unwrap();
            assert_eq!(scan.len(), 30);
            assert!(
                max_slope(&scan) < 0.0,
                "n={n} d={d}: max slope {:e}",
                max_slope(&scan)
            );
            assert!(scan.windows(2).all(|w| w[1].f < w[0].f));
        }
    }

    #[test]
    fn scan_window_truncates_at_extinction() {
        let e = engine();
        // t0 past extinction: window clips to t*, not an error
        let t_star: f64 = extinction_time(3, 1.0);
        let scan = monotonicity_scan(e, 3, 1.0, 10.0, 0.0, 12).unwrap();
        assert!(scan.last().unwrap().time < t_star);
        assert!(matches!(
            monotonicity_scan(e, 3, 1.0, 10.0, 0.0, 5),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn bounded_monotone_up_to_extinction() {
        let e = engine();
        let t_star: f64 = extinction_time(3, 1.5);
        let scan = monotonicity_scan(e, 3, 1.5, t_star, 0.0, 40).unwrap();
        assert!(scan.iter().all(|s| s.f.is_finite() && s.f > 0.0));
        assert!(max_slope(&scan) < 0.0);
    }

    #[test]
    fn plane_functional_is_one() {
        let e = engine();
        for &(n, tau) in &[(3u32, 0.5), (3, 2.0), (1, 0.7)] {
            let v = geodesic_plane_functional(e, n, tau).unwrap();
            assert!((v - 1.0).abs() <= 1e-7, "n={n} tau={tau}: {v:.10}");
        }
    }

    #[test]
    fn csv_roundtrip_is_bit_identical() {
        let e = engine();
        let scan = monotonicity_scan(e, 3, 2.0, 0.2, 0.5, 12).unwrap();
        let csv = scan_to_csv(&scan);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("time,F,dF_estimate"));
        for (line, sample) in lines.zip(&scan) {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols[0], sample.time);
            assert_eq!(cols[1], sample.f);
            assert_eq!(cols[2], sample.df_estimate);
        }
    }
}
