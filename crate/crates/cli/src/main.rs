//! `hypheat`: evaluate odd-dimensional hyperbolic heat kernels, dump their
//! exact building blocks, run the verification suites, and sample
//! weighted-volume scans along geodesic-sphere flows.
//!
//! Exit codes: 0 on success with all checks passing, 1 when at least one
//! verification fails (the report is still emitted), 2 on usage or domain
//! errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hypheat::grid::Axis;
use hypheat::kernel::QuadSpec;
use hypheat::suites::{self, Overrides, SUITE_NAMES};
use hypheat::{Error, KernelEngine64, alpha_engine, monotonicity};

#[derive(Parser)]
#[command(name = "hypheat", version, about)]
struct Cli {
    /// Ladder budget (highest f-level the engine may use).
    #[arg(long, global = true, default_value_t = 64)]
    levels: u32,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum AlphaFormat {
    #[default]
    Json,
    Latex,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum ScanFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate K_n at one point: logK, K, alpha and the superconvexity
    /// margin as JSON.
    Eval {
        /// Odd dimension of the hyperbolic space.
        #[arg(long)]
        n: u32,
        /// Kernel time, > 0.
        #[arg(long)]
        t: f64,
        /// Geodesic distance, >= 0.
        #[arg(long)]
        rho: f64,
    },

    /// Dump the exact ladder closed forms f_l = (p·ρ + q·sinh ρ)/sinh^{2l-1}ρ
    /// as JSON (σ-polynomial coefficients low-to-high, decimal strings).
    Table {
        #[arg(long, default_value_t = 10)]
        l_max: u32,
    },

    /// Dump the exact expansion of α_n.
    Alpha {
        /// Odd dimension.
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t)]
        format: AlphaFormat,
    },

    /// Run one verification suite (or `all`), emitting one JSON report per
    /// suite.
    Verify {
        /// One of the named suites, or `all`.
        suite: String,
        /// Largest odd dimension swept.
        #[arg(long)]
        n_max: Option<u32>,
        /// Largest ladder level swept.
        #[arg(long)]
        l_max: Option<u32>,
        /// Largest α index m swept.
        #[arg(long)]
        m_max: Option<u32>,
        /// Tolerance override (default per suite).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_count: Option<usize>,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        rho_count: Option<usize>,
        /// Use linearly spaced grids instead of log-spaced ones.
        #[arg(long)]
        linear: bool,
    },

    /// Sample the weighted volume F(t) along a geodesic-sphere flow; exits
    /// 1 if any sampled slope fails to be negative.
    Mcf {
        /// Dimension of the evolving sphere (odd; the kernel dimension).
        #[arg(long)]
        n: u32,
        /// Initial geodesic radius.
        #[arg(long)]
        r0: f64,
        /// Monotonicity reference time t₀.
        #[arg(long)]
        t0: f64,
        /// Distance of the weight pole from the sphere center.
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_enum, default_value_t)]
        format: ScanFormat,
    },

    /// Chapman–Kolmogorov check for K_3 at one (s, t, d01) triple.
    Semigroup {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        d01: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("hypheat: {message}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("hypheat: {err}");
            ExitCode::from(2)
        }
    }
}

/// HYPHEAT_THREADS caps sweep parallelism; unset means the rayon default.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("HYPHEAT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&k| k >= 1)
        .ok_or_else(|| format!("HYPHEAT_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<bool, Error> {
    let engine = KernelEngine64::new(cli.levels)?;
    let (text, passed) = match cli.command {
        Command::Eval { n, t, rho } => (eval_json(&engine, n, t, rho)?, true),
        Command::Table { l_max } => (table_json(l_max)?, true),
        Command::Alpha { n, format } => {
            let alpha = alpha_engine::build_alpha(n)?;
            let text = match format {
                AlphaFormat::Json => {
                    serde_json::to_string_pretty(&alpha.to_json()).expect("alpha dump serializes")
                }
                AlphaFormat::Latex => alpha.to_latex(),
            };
            (text, true)
        }
        Command::Verify {
            suite,
            n_max,
            l_max,
            m_max,
            tol,
            t_min,
            t_max,
            t_count,
            rho_min,
            rho_max,
            rho_count,
            linear,
        } => {
            let axis = |name: &str,
                        min: Option<f64>,
                        max: Option<f64>,
                        count: Option<usize>,
                        d: (f64, f64, usize)| {
                if min.is_none() && max.is_none() && count.is_none() {
                    return Ok::<Option<Axis>, Error>(None);
                }
                let (min, max, count) =
                    (min.unwrap_or(d.0), max.unwrap_or(d.1), count.unwrap_or(d.2));
                if count < 2 || min <= 0.0 || max <= min {
                    return Err(Error::Usage(format!(
                        "grid for {name} needs count >= 2 and 0 < min < max"
                    )));
                }
                Ok(Some(if linear {
                    Axis::linear(name, min, max, count)
                } else {
                    Axis::log(name, min, max, count)
                }))
            };
            let overrides = Overrides {
                n_max,
                l_max,
                m_max,
                tol,
                t_axis: axis("t", t_min, t_max, t_count, (1e-3, 1e2, 25))?,
                rho_axis: axis("rho", rho_min, rho_max, rho_count, (1e-3, 30.0, 40))?,
            };
            let names: Vec<&str> = if suite == "all" {
                SUITE_NAMES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut text = String::new();
            let mut passed = true;
            for name in names {
                let report = suites::run_suite(name, &engine, &overrides)?;
                passed &= report.pass;
                if suite == "all" {
                    // one JSON object per suite, newline-delimited
                    writeln!(
                        text,
                        "{}",
                        serde_json::to_string(&report).expect("report serializes")
                    )
                    .unwrap();
                } else {
                    text = report.to_json();
                }
            }
            (text, passed)
        }
        Command::Mcf {
            n,
            r0,
            t0,
            d,
            samples,
            format,
        } => {
            let scan = monotonicity::monotonicity_scan(&engine, n, r0, t0, d, samples)?;
            let passed = monotonicity::max_slope(&scan) < 0.0;
            let text = match format {
                ScanFormat::Csv => monotonicity::scan_to_csv(&scan),
                ScanFormat::Json => {
                    let rows: Vec<serde_json::Value> = scan
                        .iter()
                        .map(|s| {
                            serde_json::json!({
                                "time": s.time,
                                "F": s.f,
                                "dF_estimate": s.df_estimate,
                            })
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).expect("scan serializes")
                }
            };
            (text, passed)
        }
        Command::Semigroup { s, t, d01, tol } => {
            let rel = engine.semigroup_check(s, t, d01, QuadSpec::default())?;
            let passed = rel <= tol;
            let report = serde_json::json!({
                "check_name": "semigroup",
                "s": s,
                "t": t,
                "d01": d01,
                "relative_error": rel,
                "tolerance": tol,
                "pass": passed,
            });
            (
                serde_json::to_string_pretty(&report).expect("report serializes"),
                passed,
            )
        }
    };

    let mut text = text;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match cli.output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(passed)
}

fn eval_json(engine: &KernelEngine64, n: u32, t: f64, rho: f64) -> Result<String, Error> {
    let eval = engine.log_kernel(n, t, rho)?;
    let margin = if rho > 0.0 {
        Some(engine.superconvexity_margin(n, t, rho)?)
    } else {
        None
    };
    let value = serde_json::json!({
        "n": n,
        "t": t,
        "rho": rho,
        "logK": eval.log_k,
        "K": eval.k(),
        "alpha": eval.alpha,
        "margin": margin,
    });
    Ok(serde_json::to_string_pretty(&value).expect("eval serializes"))
}

fn table_json(l_max: u32) -> Result<String, Error> {
    let table = hypheat::FlTable64::build(l_max)?;
    let reps: Vec<serde_json::Value> = table
        .reps()
        .iter()
        .map(|rep| {
            serde_json::json!({
                "level": rep.level(),
                "p": rep.p_decimal(),
                "q": rep.q_decimal(),
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&reps).expect("table serializes"))
}
