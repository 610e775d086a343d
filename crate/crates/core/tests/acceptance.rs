//! Acceptance suite: every release criterion at its pinned tolerance, one
//! pass/fail line per criterion.
//!
//! Run with `cargo test -p hypheat --test acceptance -- --nocapture` to see
//! the lines for passing criteria too.

use std::sync::OnceLock;
use std::time::Instant;

use hypheat::kernel::QuadSpec;
use hypheat::report::VerificationReport;
use hypheat::suites::{self, Overrides};
use hypheat::{KernelEngine64, monotonicity};

fn engine() -> &'static KernelEngine64 {
    static ENGINE: OnceLock<KernelEngine64> = OnceLock::new();
    ENGINE.get_or_init(|| KernelEngine64::with_default_budget().expect("engine builds"))
}

fn announce(criterion: &str, report: &VerificationReport) {
    println!(
        "ACCEPTANCE {criterion}: {} (worst = {:e}, tolerance = {:e}, at {:?})",
        if report.pass { "PASS" } else { "FAIL" },
        report.worst_value,
        report.tolerance,
        report.worst_location,
    );
}

fn run(criterion: &str, suite: &str) -> VerificationReport {
    let report = suites::run_suite(suite, engine(), &Overrides::default()).expect(suite);
    announce(criterion, &report);
    report
}

#[test]
fn criterion_1_superconvexity_grid() {
    // single-threaded runtime target: under 60 s
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let report = pool
        .install(|| suites::run_suite("superconvexity", engine(), &Overrides::default()))
        .expect("superconvexity");
    let elapsed = start.elapsed();
    announce("1 superconvexity", &report);
    println!("ACCEPTANCE 1 superconvexity: single-threaded sweep took {elapsed:?}");
    assert!(report.pass, "{report:?}");
    assert!(
        elapsed.as_secs() < 60,
        "single-threaded sweep exceeded 60 s: {elapsed:?}"
    );
}

#[test]
fn criterion_2_margin_form_equivalence() {
    let report = run("2 equivalence", "equivalence");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-12);
}

#[test]
fn criterion_3_heat_residual() {
    let report = run("3 heat-residual", "heat");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-8);
}

#[test]
fn criterion_4_normalization_and_equality_case() {
    let report = run("4 normalization", "normalization");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-8);

    // the same integral run as the geodesic-plane functional: the equality
    // case of the monotonicity, constant 1 in tau
    let mut worst: f64 = 0.0;
    for &tau in &[0.05, 0.5, 5.0] {
        let v = monotonicity::geodesic_plane_functional(engine(), 3, tau).unwrap();
        worst = worst.max((v - 1.0).abs());
    }
    println!(
        "ACCEPTANCE 4 geodesic-plane equality: {} (worst |F-1| = {worst:e}, tolerance = 1e-7)",
        if worst <= 1e-7 { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-7);
}

#[test]
fn criterion_5_ladder_and_alpha_structure() {
    let ladder = run("5 ladder-positivity-decrease", "ladder");
    assert!(ladder.pass, "{ladder:?}");
    let structure = run("5 alpha-structure", "alpha-structure");
    assert!(structure.pass, "{structure:?}");
    assert_eq!(structure.worst_value, 0.0, "structure identities are exact");
}

#[test]
fn criterion_6_ladder_log_convexity() {
    let report = run("6 log-convexity", "yuzhao");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-12);
}

#[test]
fn criterion_7_proof_intermediates() {
    let report = run("7 proof-intermediates", "proof-intermediates");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-12);
}

#[test]
fn criterion_8_sphere_flow_monotonicity() {
    let report = run("8 mcf-monotonicity", "mcf");
    assert!(report.pass, "{report:?}");
    assert!(report.worst_value < 0.0, "every slope strictly negative");
}

#[test]
fn criterion_9_semigroup_identity() {
    let report = run("9 semigroup", "semigroup");
    assert!(report.pass, "{report:?}");
    assert_eq!(report.tolerance, 1e-6);
}

#[test]
fn log_kernel_stays_finite_on_grid_corners() {
    // log-domain contract behind several criteria
    let e = engine();
    for &(n, t, rho) in &[
        (1u32, 1e-3, 30.0),
        (31, 1e-3, 30.0),
        (31, 1e2, 30.0),
        (31, 1e-3, 1e-3),
    ] {
        let k = e.log_kernel(n, t, rho).unwrap();
        assert!(
            k.log_k.is_finite(),
            "logK not finite at n={n} t={t} rho={rho}"
        );
        assert!(k.alpha > 0.0);
    }
    let spec = QuadSpec::default();
    let masses: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&t| e.mass_beyond(3, t, 0.5, spec).unwrap())
        .collect();
    assert!(
        masses[0] > masses[1] && masses[1] > masses[2],
        "delta-family concentration must be monotone: {masses:?}"
    );
}
