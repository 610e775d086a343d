//! Named verification suites.
//!
//! Each suite sweeps one inequality family over its grid and produces a
//! single [`VerificationReport`]. The CLI `verify` subcommands and the
//! acceptance tests run exactly this code, so tolerances live here.

use rayon::prelude::*;

use crate::Result;
use crate::grid::{Axis, GridSpec};
use crate::kernel::{KernelEngine, QuadSpec};
use crate::monotonicity;
use crate::report::{Location, VerificationReport, WorstMax, WorstMin};

/// Optional overrides; `None` means the suite's specified default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_max: Option<u32>,
    pub l_max: Option<u32>,
    pub m_max: Option<u32>,
    pub t_axis: Option<Axis>,
    pub rho_axis: Option<Axis>,
    pub tol: Option<f64>,
}

/// Suite names accepted by [`run_suite`], in the order `all` runs them.
pub const SUITE_NAMES: &[&str] = &[
    "superconvexity",
    "equivalence",
    "heat",
    "normalization",
    "ladder",
    "yuzhao",
    "alpha-structure",
    "proof-intermediates",
    "mcf",
    "semigroup",
];

pub fn run_suite(
    name: &str,
    engine: &KernelEngine<f64>,
    overrides: &Overrides,
) -> Result<VerificationReport> {
    match name {
        "superconvexity" => superconvexity(engine, overrides),
        "equivalence" => equivalence(engine, overrides),
        "heat" => heat(engine, overrides),
        "normalization" => normalization(engine, overrides),
        "ladder" => ladder(engine, overrides),
        "yuzhao" => yuzhao(engine, overrides),
        "alpha-structure" => alpha_structure(engine, overrides),
        "proof-intermediates" => proof_intermediates(engine, overrides),
        "mcf" => mcf(engine, overrides),
        "semigroup" => semigroup(engine, overrides),
        other => Err(crate::Error::Usage(format!("unknown suite `{other}`"))),
    }
}

fn default_t_axis() -> Axis {
    Axis::log("t", 1e-3, 1e2, 25)
}

fn default_rho_axis() -> Axis {
    Axis::log("rho", 1e-3, 30.0, 40)
}

fn odd_dims(n_max: u32) -> Vec<u32> {
    (1..=n_max).step_by(2).collect()
}

/// Superconvexity of `log K_n` in σ: the margin stays positive on the
/// grid, within a rounding slack of `tol·(|part1| + |part2|)`, and with no
/// slack at all for ρ <= 10 where the margin is far from the noise floor.
pub fn superconvexity(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let t_axis = o.t_axis.clone().unwrap_or_else(default_t_axis);
    let rho_axis = o.rho_axis.clone().unwrap_or_else(default_rho_axis);
    let tol = o.tol.unwrap_or(1e-12);
    let dims = odd_dims(o.n_max.unwrap_or(31));
    let (t_pts, rho_pts) = (t_axis.points(), rho_axis.points());

    let results: Result<Vec<(WorstMin, WorstMin, WorstMin)>> = dims
        .par_iter()
        .map(|&n| {
            let mut raw_worst = WorstMin::new();
            let mut ratio_worst = WorstMin::new();
            let mut raw_near = WorstMin::new();
            for &rho in &rho_pts {
                for &t in &t_pts {
                    let parts = engine.margin_parts(n, t, rho)?;
                    let margin = parts.margin();
                    let here = Location::Grid { n, t, rho };
                    raw_worst.update(margin, here.clone());
                    ratio_worst.update(margin / parts.magnitude(), here.clone());
                    if rho <= 10.0 {
                        raw_near.update(margin, here);
                    }
                }
            }
            Ok((raw_worst, ratio_worst, raw_near))
        })
        .collect();
    let (raw_worst, ratio_worst, raw_near) = results?.into_iter().fold(
        (WorstMin::new(), WorstMin::new(), WorstMin::new()),
        |(a, b, c), (d, e, f)| (a.merge(d), b.merge(e), c.merge(f)),
    );

    Ok(VerificationReport {
        check_name: "superconvexity".into(),
        grid: GridSpec::new(vec![
            Axis::list("n", &dims.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            t_axis,
            rho_axis,
        ]),
        worst_value: raw_worst.value,
        worst_location: raw_worst.location,
        tolerance: tol,
        pass: ratio_worst.value >= -tol && raw_near.value > 0.0,
    })
}

/// Agreement of the σ-form and ρ-form margins:
/// `|margin_rho_form - sinh²ρ·margin| <= tol·|margin_rho_form|`.
pub fn equivalence(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let t_axis = o.t_axis.clone().unwrap_or_else(default_t_axis);
    let rho_axis = o.rho_axis.clone().unwrap_or_else(default_rho_axis);
    let tol = o.tol.unwrap_or(1e-12);
    let dims = odd_dims(o.n_max.unwrap_or(31));
    let (t_pts, rho_pts) = (t_axis.points(), rho_axis.points());

    let results: Result<Vec<WorstMax>> = dims
        .par_iter()
        .map(|&n| {
            let mut worst = WorstMax::new();
            for &rho in &rho_pts {
                let sinh_sq = rho.sinh().powi(2);
                for &t in &t_pts {
                    let sigma_form = sinh_sq * engine.superconvexity_margin(n, t, rho)?;
                    let rho_form = engine.margin_rho_form(n, t, rho)?;
                    let rel = (rho_form - sigma_form).abs() / rho_form.abs();
                    worst.update(rel, Location::Grid { n, t, rho });
                }
            }
            Ok(worst)
        })
        .collect();
    let worst = results?.into_iter().fold(WorstMax::new(), WorstMax::merge);

    Ok(VerificationReport {
        check_name: "equivalence".into(),
        grid: GridSpec::new(vec![
            Axis::list("n", &dims.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            t_axis,
            rho_axis,
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value <= tol,
    })
}

/// Heat-equation residual from analytic derivatives only; pure rounding,
/// bounded by `tol` on the grid for n <= 15.
pub fn heat(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let t_axis = o.t_axis.clone().unwrap_or_else(default_t_axis);
    let rho_axis = o.rho_axis.clone().unwrap_or_else(default_rho_axis);
    let tol = o.tol.unwrap_or(1e-8);
    let dims = odd_dims(o.n_max.unwrap_or(15).min(15));
    let (t_pts, rho_pts) = (t_axis.points(), rho_axis.points());

    let results: Result<Vec<WorstMax>> = dims
        .par_iter()
        .map(|&n| {
            let mut worst = WorstMax::new();
            for &rho in &rho_pts {
                for &t in &t_pts {
                    let residual = engine.heat_residual(n, t, rho)?;
                    worst.update(residual, Location::Grid { n, t, rho });
                }
            }
            Ok(worst)
        })
        .collect();
    let worst = results?.into_iter().fold(WorstMax::new(), WorstMax::merge);

    Ok(VerificationReport {
        check_name: "heat".into(),
        grid: GridSpec::new(vec![
            Axis::list("n", &dims.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            t_axis,
            rho_axis,
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value <= tol,
    })
}

/// Stochastic completeness: kernel mass 1 within `tol` across dimensions
/// and times.
pub fn normalization(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let tol = o.tol.unwrap_or(1e-8);
    let dims: Vec<u32> = odd_dims(o.n_max.unwrap_or(9).min(9));
    let times = [0.01, 0.1, 1.0, 10.0];
    let mut worst = WorstMax::new();
    for &n in &dims {
        for &t in &times {
            let mass = engine.normalization(n, t, QuadSpec::default())?;
            worst.update((mass - 1.0).abs(), Location::Time { n, t });
        }
    }
    Ok(VerificationReport {
        check_name: "normalization".into(),
        grid: GridSpec::new(vec![
            Axis::list("n", &dims.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            Axis::list("t", &times),
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value <= tol,
    })
}

/// Ladder positivity and strict decrease for every level on the wide grid;
/// the worst value is the smallest decrement of `ln f_l` between adjacent
/// grid points.
pub fn ladder(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let l_max = o.l_max.unwrap_or(40).min(engine.table().level_max());
    let rho_axis = o
        .rho_axis
        .clone()
        .unwrap_or_else(|| Axis::log("rho", 1e-4, 40.0, 60));
    let rho_pts = rho_axis.points();
    let table = engine.table();

    let results: Result<Vec<(bool, WorstMin)>> = (1..=l_max)
        .into_par_iter()
        .map(|l| {
            let mut positive = true;
            let mut worst = WorstMin::new();
            let mut prev: Option<f64> = None;
            for &rho in &rho_pts {
                let g = table.g(l, rho)?;
                let ln_f = table.eval_ln(l, rho)?;
                if g <= 0.0 || g.is_nan() || !ln_f.is_finite() {
                    positive = false;
                }
                if let Some(p) = prev {
                    worst.update(p - ln_f, Location::Ladder { l, rho });
                }
                prev = Some(ln_f);
            }
            Ok((positive, worst))
        })
        .collect();
    let mut all_positive = true;
    let mut worst = WorstMin::new();
    for (positive, w) in results? {
        all_positive &= positive;
        worst = worst.merge(w);
    }

    Ok(VerificationReport {
        check_name: "ladder".into(),
        grid: GridSpec::new(vec![
            Axis::linear("l", 1.0, l_max as f64, l_max as usize),
            rho_axis,
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: 0.0,
        pass: all_positive && worst.value > 0.0,
    })
}

/// Ladder log-convexity `f_{l+2}f_l - f_{l+1}² >= -tol·f_{l+1}²` for
/// every level on the grid.
pub fn yuzhao(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let l_max = o
        .l_max
        .unwrap_or(20)
        .min(engine.table().level_max().saturating_sub(2));
    let rho_axis = o.rho_axis.clone().unwrap_or_else(default_rho_axis);
    let tol = o.tol.unwrap_or(1e-12);
    let rho_pts = rho_axis.points();
    let table = engine.table();

    let results: Result<Vec<WorstMin>> = (1..=l_max)
        .into_par_iter()
        .map(|l| {
            let report = table.check_logconvex(l, &rho_pts, tol)?;
            let mut worst = WorstMin::new();
            worst.update(report.worst_value, report.worst_location);
            Ok(worst)
        })
        .collect();
    let worst = results?.into_iter().fold(WorstMin::new(), WorstMin::merge);

    Ok(VerificationReport {
        check_name: "yuzhao".into(),
        grid: GridSpec::new(vec![
            Axis::linear("l", 1.0, l_max as f64, l_max as usize),
            rho_axis,
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value >= -tol,
    })
}

/// Exact structure of every `α_{2m+1}`: strictly positive integer
/// coefficients, `P_{m,0} = f_1^m`, `P_{m,m-1} = 2^{m-1}·f_m`, ladder
/// levels bounded by m. The worst value counts violations.
pub fn alpha_structure(_engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let m_max = o.m_max.unwrap_or(25);
    let mut violations = 0.0;
    let mut worst_location = Location::Nowhere;
    for m in 0..=m_max {
        let alpha = crate::alpha_engine::build_alpha(2 * m + 1)?;
        let report = alpha.structure_check();
        if !report.pass {
            violations += report.worst_value;
            worst_location = report.worst_location;
        }
    }
    Ok(VerificationReport {
        check_name: "alpha-structure".into(),
        grid: GridSpec::new(vec![Axis::linear(
            "m",
            0.0,
            m_max as f64,
            m_max as usize + 1,
        )]),
        worst_value: violations,
        worst_location,
        tolerance: 0.0,
        pass: violations == 0.0,
    })
}

/// Sign of the proof intermediates: `A >= 0` and every `B_{m,i} >= 0` on
/// the grid, with rounding slack `tol` relative to the term-magnitude sum.
pub fn proof_intermediates(
    engine: &KernelEngine<f64>,
    o: &Overrides,
) -> Result<VerificationReport> {
    let m_max = o.m_max.unwrap_or(12);
    let t_axis = o.t_axis.clone().unwrap_or_else(default_t_axis);
    let rho_axis = o.rho_axis.clone().unwrap_or_else(default_rho_axis);
    let tol = o.tol.unwrap_or(1e-12);
    let (t_pts, rho_pts) = (t_axis.points(), rho_axis.points());

    let results: Result<Vec<WorstMin>> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let mut worst = WorstMin::new();
            for &rho in &rho_pts {
                // B_{m,i} do not depend on t; check them once per ρ
                let probe = engine.proof_intermediates(m, 1.0, rho)?;
                for (i, &(sum, abs_sum)) in probe.b_scaled.iter().enumerate() {
                    let ratio = if abs_sum > 0.0 { sum / abs_sum } else { 0.0 };
                    worst.update(
                        ratio,
                        Location::ProofTerm {
                            m,
                            i: i as u32,
                            t: 1.0,
                            rho,
                        },
                    );
                }
                for &t in &t_pts {
                    let p = engine.proof_intermediates(m, t, rho)?;
                    let (sum, abs_sum) = p.a_scaled;
                    let ratio = if abs_sum > 0.0 { sum / abs_sum } else { 0.0 };
                    worst.update(ratio, Location::Proof { m, t, rho });
                }
            }
            Ok(worst)
        })
        .collect();
    let worst = results?.into_iter().fold(WorstMin::new(), WorstMin::merge);

    Ok(VerificationReport {
        check_name: "proof-intermediates".into(),
        grid: GridSpec::new(vec![
            Axis::linear("m", 1.0, m_max as f64, m_max as usize),
            t_axis,
            rho_axis,
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value >= -tol,
    })
}

/// Monotonicity of the weighted volume on sphere flows (centered and
/// offset), the RK4/closed-form radius agreement, and the geodesic-plane
/// equality case. The worst value is the largest slope seen.
pub fn mcf(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let samples = 200;
    let flows = [(1u32, 1.0f64, 0.1f64), (3, 2.0, 0.2)];
    let offsets = [0.0, 0.5, 1.0];
    let mut worst = WorstMax::new();
    let mut pointwise_ok = true;

    for &(n, r0, t0) in &flows {
        for &d in &offsets {
            let scan = monotonicity::monotonicity_scan(engine, n, r0, t0, d, samples)?;
            for s in &scan {
                worst.update(
                    s.df_estimate,
                    Location::Flow {
                        n,
                        r0,
                        d,
                        time: s.time,
                    },
                );
            }
            pointwise_ok &= scan.windows(2).all(|w| w[1].f < w[0].f);
        }
    }

    let mut rk4_ok = true;
    for &(n, r0, t0) in &flows {
        let t_star: f64 = monotonicity::extinction_time(n, r0);
        let end = t0.min(t_star) * 0.95;
        for j in 1..=10 {
            let time = end * j as f64 / 10.0;
            let exact = monotonicity::sphere_radius(n, r0, time)?;
            let rk = monotonicity::rk4_sphere_radius(n, r0, time, 1e-4)?;
            rk4_ok &= (exact - rk).abs() <= 1e-8;
        }
    }

    let plane_tol = 1e-7;
    let mut plane_ok = true;
    for &tau in &[0.05, 0.5, 5.0] {
        let v = monotonicity::geodesic_plane_functional(engine, 3, tau)?;
        plane_ok &= (v - 1.0).abs() <= plane_tol;
    }
    for &(n, tau) in &[(1u32, 0.5), (7, 1.0)] {
        let v = monotonicity::geodesic_plane_functional(engine, n, tau)?;
        plane_ok &= (v - 1.0).abs() <= plane_tol;
    }

    Ok(VerificationReport {
        check_name: "mcf".into(),
        grid: GridSpec::new(vec![
            Axis::list("n", &[1.0, 3.0]),
            Axis::list("d", &offsets),
            Axis::linear("samples", 1.0, samples as f64, samples),
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: o.tol.unwrap_or(0.0),
        pass: worst.value < o.tol.unwrap_or(0.0).max(0.0) && pointwise_ok && rk4_ok && plane_ok,
    })
}

/// Chapman–Kolmogorov identity on H³ at three (s, t, d01) points.
pub fn semigroup(engine: &KernelEngine<f64>, o: &Overrides) -> Result<VerificationReport> {
    let tol = o.tol.unwrap_or(1e-6);
    let points = [(0.5, 0.5, 0.0), (0.3, 0.7, 2.0), (1.0, 1.0, 5.0)];
    let mut worst = WorstMax::new();
    for &(s, t, d01) in &points {
        let rel = engine.semigroup_check(s, t, d01, QuadSpec::default())?;
        worst.update(rel, Location::Semigroup { s, t, d01 });
    }
    Ok(VerificationReport {
        check_name: "semigroup".into(),
        grid: GridSpec::new(vec![
            Axis::list("s", &[0.5, 0.3, 1.0]),
            Axis::list("t", &[0.5, 0.7, 1.0]),
            Axis::list("d01", &[0.0, 2.0, 5.0]),
        ]),
        worst_value: worst.value,
        worst_location: worst.location,
        tolerance: tol,
        pass: worst.value <= tol,
    })
}
