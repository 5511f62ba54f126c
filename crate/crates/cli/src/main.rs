mod config;
mod summary;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use nappal::diagnostics::{
    audit_trace, check_descent_inequalities, check_gradients, estimate_rate, telescoping_budget,
    RateStatus,
};
use nappal::model::{validate_problem, CheckOutcome};
use nappal::solver::{Solver, Termination};
use nappal::trace::{read_trace, write_trace};

use config::{ConfigError, ExperimentConfig};
use summary::{RunInfo, Summary};

const EXIT_CONVERGED: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_MAX_ITERS: u8 = 2;
const EXIT_BREAKDOWN: u8 = 3;

/// Samples drawn by `validate` for the descent and gradient checks.
const DESCENT_SAMPLES: usize = 1000;
const GRADIENT_POINTS: usize = 100;

#[derive(Parser)]
#[command(
    name = "nappal",
    version,
    about = "Augmented-Lagrangian primal-proximal solver"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured instance, solve it and write trace, summary and instance files.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Keep every k-th trace row (overrides output.trace_stride).
        #[arg(long)]
        trace_stride: Option<usize>,
        /// Worker threads for the u-step (overrides solver.workers).
        #[arg(long)]
        workers: Option<usize>,
        /// Replace the instance seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check the configured instance: structure, constants and gradients.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Recompute residuals, rate and invariant counts from a trace file.
    Report {
        trace: PathBuf,
        /// Summary holding `c3`; defaults to `summary.toml` next to the trace.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let code = match cli.command {
        Command::Solve {
            config,
            out,
            trace_stride,
            workers,
            seed_override,
        } => cmd_solve(&config, &out, trace_stride, workers, seed_override),
        Command::Validate {
            config,
            seed_override,
        } => cmd_validate(&config, seed_override),
        Command::Report { trace, summary } => cmd_report(&trace, summary.as_deref()),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed_override {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn resolve(out: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ConfigError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| ConfigError(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn cmd_solve(
    config: &Path,
    out: &Path,
    trace_stride: Option<usize>,
    workers: Option<usize>,
    seed_override: Option<u64>,
) -> Result<u8, ConfigError> {
    let mut cfg = load(config, seed_override)?;
    if let Some(s) = trace_stride {
        if s == 0 {
            return Err(ConfigError("--trace-stride must be >= 1".into()));
        }
        cfg.output.trace_stride = s;
    }
    if let Some(w) = workers {
        cfg.solver.workers = w;
    }
    let instance = cfg.instance()?;
    let spec = instance.to_spec(&cfg.problem.constant_scale)?;
    let solver_cfg = cfg.solver_config(&spec)?;
    info!(
        "solving {} (seed {}) with gamma = {:.6} (bound {:.6})",
        instance.name(),
        instance.seed(),
        solver_cfg.gamma,
        spec.constants().gamma_bound()
    );
    let (sigma, n_workers) = (solver_cfg.sigma, solver_cfg.workers);
    let res = Solver::new(&spec, solver_cfg)?.solve()?;

    fs::create_dir_all(out)
        .map_err(|e| ConfigError(format!("cannot create {}: {e}", out.display())))?;
    let trace_path = resolve(out, &cfg.output.trace);
    if let Some(dir) = trace_path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| ConfigError(format!("cannot create {}: {e}", dir.display())))?;
    }
    write_trace(&trace_path, &res.trace)?;

    let run = RunInfo {
        problem: instance.name().into(),
        seed: instance.seed(),
        termination: res.termination,
        iterations: res.iterations,
        trace_rows: res.trace.len(),
        trace_stride: cfg.output.trace_stride,
        gamma: res.gamma,
        gamma_bound: res.gamma_bound,
        sigma,
        workers: n_workers,
        sup_h: res.sup_h,
        min_tau: res.min_tau,
        breakdown: res.breakdown.clone(),
    };
    let summary = Summary::new(run, &res);
    let text = toml::to_string(&summary)
        .map_err(|e| ConfigError(format!("cannot encode summary: {e}")))?;
    write_text(&resolve(out, &cfg.output.summary), &text)?;
    let text = toml::to_string(&instance)
        .map_err(|e| ConfigError(format!("cannot encode instance: {e}")))?;
    write_text(&resolve(out, &cfg.output.instance), &text)?;

    let last = res.trace.last().expect("trace holds the initial row");
    println!(
        "{:?} after {} iterations: feasibility {:.3e}, certificate bound {:.3e}, Lambda {:.10e}",
        res.termination, res.iterations, last.feas_residual, last.cert_bound, last.lambda
    );
    println!("trace: {} ({} rows)", trace_path.display(), res.trace.len());
    Ok(match res.termination {
        Termination::Converged => EXIT_CONVERGED,
        Termination::MaxIters => EXIT_MAX_ITERS,
        Termination::NumericalBreakdown => {
            if let Some(d) = &res.breakdown {
                eprintln!("numerical breakdown: {d}");
            }
            EXIT_BREAKDOWN
        }
    })
}

fn cmd_validate(config: &Path, seed_override: Option<u64>) -> Result<u8, ConfigError> {
    let cfg = load(config, seed_override)?;
    let instance = cfg.instance()?;
    let spec = instance.to_spec(&cfg.problem.constant_scale)?;
    let seed = instance.seed();

    let mut failures = 0;
    let mut print = |title: &str, report: &nappal::model::ValidationReport| {
        println!("== {title}");
        print!("{report}");
        failures += report
            .checks
            .iter()
            .filter(|c| c.outcome == CheckOutcome::Fail)
            .count();
    };
    print("problem", &validate_problem(&spec));
    print(
        "descent inequalities",
        &check_descent_inequalities(&spec, DESCENT_SAMPLES, seed),
    );
    print("gradients", &check_gradients(&spec, GRADIENT_POINTS, seed));

    println!("== step size");
    match cfg.solver_config(&spec) {
        Ok(s) => println!(
            "gamma = {:.6} > bound {:.6}",
            s.gamma,
            spec.constants().gamma_bound()
        ),
        Err(e) => {
            println!("FAIL {e}");
            failures += 1;
        }
    }
    if failures == 0 {
        println!("ok: no failures");
        Ok(EXIT_CONVERGED)
    } else {
        println!("{failures} failure(s)");
        Ok(EXIT_ERROR)
    }
}

fn cmd_report(trace_path: &Path, summary_path: Option<&Path>) -> Result<u8, ConfigError> {
    let trace = read_trace(trace_path)?;
    let summary_path = summary_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| trace_path.with_file_name("summary.toml"));
    let c3 = match fs::read_to_string(&summary_path) {
        Ok(text) => {
            let s: Summary = toml::from_str(&text).map_err(|e| {
                ConfigError(format!("cannot parse {}: {e}", summary_path.display()))
            })?;
            Some(s.potential.c3)
        }
        Err(_) => None,
    };

    let last = trace.last().expect("nonempty trace");
    let steps: Vec<_> = trace.iter().filter(|r| r.k >= 1).collect();
    let min_of = |f: fn(&nappal::trace::TraceRecord) -> f64| {
        trace.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    println!("rows: {} (iterations 0..={})", trace.len(), last.k);
    println!(
        "feasibility residual: final {:.3e}, min {:.3e}",
        last.feas_residual,
        min_of(|r| r.feas_residual)
    );
    if !steps.is_empty() {
        let min_xi = steps
            .iter()
            .map(|r| r.xi_norm)
            .fold(f64::INFINITY, f64::min);
        println!("xi norm: final {:.3e}, min {:.3e}", last.xi_norm, min_xi);
        println!("certificate bound: final {:.3e}", last.cert_bound);
        let best = steps
            .iter()
            .min_by(|a, b| a.step_norm().total_cmp(&b.step_norm()))
            .expect("nonempty");
        println!(
            "best iterate: k_hat = {} (step norm {:.3e}, certificate bound {:.3e})",
            best.k - 1,
            best.step_norm(),
            best.cert_bound
        );
    }

    let strided = trace.windows(2).any(|w| w[1].k != w[0].k + 1);
    if trace.len() >= 50 {
        let rate = estimate_rate(&trace, 0.5)?;
        match rate.status {
            RateStatus::BelowFloor => {
                println!("rate: below measurement floor (window {:?})", rate.window)
            }
            status => println!(
                "rate: {status:?}, alpha = {:.6}, R^2 = {:.6}, window {:?}, Lambda* = {:.12e}",
                rate.alpha.unwrap_or(f64::NAN),
                rate.r_squared.unwrap_or(f64::NAN),
                rate.window,
                rate.lambda_star
            ),
        }
        println!(
            "sqrt(k) * min step: tail ratio {:.4} ({})",
            rate.sqrt_k_ratio,
            if rate.sqrt_k_decreasing {
                "non-increasing within band"
            } else {
                "increasing"
            }
        );
    } else {
        println!("rate: not estimated (fewer than 50 rows)");
    }

    let audit = audit_trace(&trace, c3.unwrap_or(0.0));
    match c3 {
        Some(c3) => println!(
            "descent margin uses c3 = {c3:.6e} from {}",
            summary_path.display()
        ),
        None => println!("no summary found; descent check reduced to monotonicity of Lambda"),
    }
    if strided {
        println!("trace is strided; non-consecutive rows are checked for monotonicity only");
    }
    println!(
        "invariant violations: descent {}, certificate {}, dual identity {} (total {})",
        audit.descent,
        audit.certificate,
        audit.dual_identity,
        audit.total()
    );
    if let (Some(c3), false) = (c3, strided) {
        let (sum, budget) = telescoping_budget(&trace, c3);
        println!(
            "telescoping: sum c3 min step^2 = {sum:.6e} <= Lambda^1 - min Lambda = {budget:.6e}"
        );
    }
    Ok(EXIT_CONVERGED)
}
