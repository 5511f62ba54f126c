//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Quantities checked here (potential, certificate, dual identity, step sizes,
//! penalties, KKT solution, rate fit) are recomputed from the problem data
//! rather than read back from the solver.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nappal::diagnostics::{check_descent_inequalities, check_gradients};
use nappal::model::{CheckOutcome, Iterate, ProblemSpec};
use nappal::problems::{
    brute_force_stationary, Axis, ErmInstance, ErmParams, GridSpec, SharingInstance, SharingParams,
};
use nappal::prox::{prox_separable, Regularizer};
use nappal::solver::{solve, SolveResult, Solver, SolverConfig, Termination};
use nappal::trace::write_trace_to;

const RUN_ITERS: usize = 20_000;
const SLACK: f64 = 1e-8;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn main() -> ExitCode {
    let started = Instant::now();
    let instances = criterion_one_instances();
    let runs: Vec<AuditedRun> = instances
        .iter()
        .map(|(name, spec)| audited_run(name, spec))
        .collect();
    let qp = QpRun::new(1);

    let outcomes = vec![
        criterion_1(&runs),
        criterion_2(&runs),
        criterion_3(&runs),
        criterion_4(&qp),
        criterion_5(&runs),
        criterion_6(&qp),
        criterion_7(),
        criterion_8(&instances),
        criterion_9(&instances),
        criterion_10(),
    ];

    println!();
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {}: {}", o.id, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "\n{} of {} criteria passed in {:.1}s",
        outcomes.len() - failed,
        outcomes.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn criterion_one_instances() -> Vec<(String, ProblemSpec)> {
    let mut out = Vec::new();
    for seed in 1..=5 {
        let spec = SharingInstance::generate(SharingParams::new(4, 3, 5, 0.5, seed))
            .and_then(|i| i.to_spec())
            .expect("sharing instance");
        out.push((format!("sharing-s{seed}"), spec));
    }
    for seed in 1..=5 {
        let spec = ErmInstance::generate(ErmParams::new(10, 20, seed))
            .and_then(|i| i.to_spec())
            .expect("erm instance");
        out.push((format!("erm-s{seed}"), spec));
    }
    out
}

// ---------------------------------------------------------------------------
// Constants recomputed from the problem data.

#[derive(Debug, Clone, Copy)]
struct Consts {
    l_g: f64,
    l_h: f64,
    l_omega: f64,
    l_theta: f64,
    b_norm: f64,
    lam: f64,
    gamma: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl Consts {
    fn new(spec: &ProblemSpec, gamma: f64) -> Self {
        let sv = spec.b().clone().svd(false, false).singular_values;
        let b_norm = sv.max();
        let lam = sv.min() * sv.min();
        let (l_g, l_h) = (spec.l_g, spec.l_h);
        let c1 = 7.0 * (l_g + gamma * b_norm * spec.l_theta).powi(2) / (gamma * lam);
        let c2 = 7.0 * (l_g + l_h).powi(2) / (gamma * lam);
        let c4 = (gamma * lam - l_g - l_h) / 2.0 - c2;
        let c3 = 0.5f64.min(c4).min(1.0 / (3.0 * gamma));
        Self {
            l_g,
            l_h,
            l_omega: spec.l_omega_components.iter().sum(),
            l_theta: spec.l_theta,
            b_norm,
            lam,
            gamma,
            c1,
            c2,
            c3,
        }
    }

    fn delta(&self, q_norm: f64) -> f64 {
        let (g, lt2) = (self.gamma, self.l_theta * self.l_theta);
        1.0 / (self.l_g
            + q_norm * self.l_omega
            + g * lt2
            + 14.0 * g * self.b_norm * self.b_norm * lt2 / self.lam
            + 14.0 * (self.l_g + g * self.b_norm * self.l_theta).powi(2) / (g * self.lam)
            + 1.0)
    }

    fn h(&self, sigma: f64, q_norm: f64, delta: f64) -> f64 {
        let g = self.gamma;
        let b1 = 2.0 * self.l_g
            + q_norm * self.l_omega
            + g * self.b_norm * self.l_theta
            + g * self.l_theta * self.l_theta
            + 1.0 / (sigma * delta);
        let b2 = 2.0 * self.l_g + self.l_h + g * self.b_norm * self.l_theta;
        let b3 = self.l_theta + self.b_norm + 1.0 / g;
        b1.max(b2).max(b3)
    }

    fn tau(&self, eps: f64, q_norm: f64) -> f64 {
        let (g, lt2) = (self.gamma, self.l_theta * self.l_theta);
        1.0 / (2.0 * eps)
            - (self.l_g + q_norm * self.l_omega + g * lt2) / 2.0
            - 7.0 * g * self.b_norm * self.b_norm * lt2 / self.lam
            - self.c1
    }
}

fn residual(spec: &ProblemSpec, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    spec.omega.value(u) + spec.b() * v
}

fn aug_lagrangian(spec: &ProblemSpec, gamma: f64, w: &Iterate) -> f64 {
    let r = residual(spec, &w.u, &w.v);
    spec.objective(&w.u, &w.v) + w.p.dot(&r) + 0.5 * gamma * r.norm_squared()
}

/// Subgradient of `L_γ` at `w⁺` implied by the optimality conditions of the
/// `u`- and `v`-steps taken from `w` with step `eps` (Euclidean kernel, no `Φ`).
fn xi_oracle(spec: &ProblemSpec, gamma: f64, eps: f64, w: &Iterate, w1: &Iterate) -> f64 {
    let b = spec.b();
    let r0 = residual(spec, &w.u, &w.v);
    let r1 = residual(spec, &w1.u, &w1.v);
    let q = &w.p + &r0 * gamma;
    let y1 = &w1.p + &r1 * gamma;
    let xi_u = spec.coupling.grad_u(&w1.u, &w1.v)
        - spec.coupling.grad_u(&w.u, &w.v)
        - spec.omega.jacobian(&w.u).tr_mul(&q)
        - (&w1.u - &w.u) / eps
        + spec.omega.jacobian(&w1.u).tr_mul(&y1);
    let xi_v = spec.grad_v_sum(&w1.u, &w1.v) + b.tr_mul(&y1);
    (xi_u.norm_squared() + xi_v.norm_squared() + r1.norm_squared()).sqrt()
}

fn step_norm(a: &Iterate, b: &Iterate) -> f64 {
    ((&a.u - &b.u).norm_squared() + (&a.v - &b.v).norm_squared() + (&a.p - &b.p).norm_squared())
        .sqrt()
}

// ---------------------------------------------------------------------------
// Criterion-1 runs, audited step by step.

struct AuditedRun {
    name: String,
    seconds: f64,
    c3: f64,
    /// `d_k = ‖w^k − w^{k+1}‖`, `k = 0..K−1`.
    steps: Vec<f64>,
    /// `Λ^k`, `k = 1..K`.
    lambdas: Vec<f64>,
    descent_violations: usize,
    worst_descent: f64,
    dual_violations: usize,
    worst_dual: f64,
    cert_violations: usize,
    worst_cert: f64,
    tau_violations: usize,
    min_tau: f64,
    lambda_mismatch: f64,
    step_mismatch: usize,
}

fn audited_run(name: &str, spec: &ProblemSpec) -> AuditedRun {
    let config = SolverConfig::for_spec(spec).expect("config");
    let (gamma, sigma) = (config.gamma, config.sigma);
    let k = Consts::new(spec, gamma);
    let b = spec.b().clone();
    let solver = Solver::new(spec, config).expect("solver");
    let start = Instant::now();
    let mut state = solver.initial_state().expect("initial state");

    let mut run = AuditedRun {
        name: name.to_string(),
        seconds: 0.0,
        c3: k.c3,
        steps: Vec::with_capacity(RUN_ITERS),
        lambdas: Vec::with_capacity(RUN_ITERS),
        descent_violations: 0,
        worst_descent: f64::NEG_INFINITY,
        dual_violations: 0,
        worst_dual: 0.0,
        cert_violations: 0,
        worst_cert: f64::NEG_INFINITY,
        tau_violations: 0,
        min_tau: f64::INFINITY,
        lambda_mismatch: 0.0,
        step_mismatch: 0,
    };
    let mut prev_lambda: Option<f64> = None;

    for _ in 0..RUN_ITERS {
        let (next, info) = solver.iterate(&state).expect("iteration");
        let (w, w1) = (&state.w, &next.w);

        let r0 = residual(spec, &w.u, &w.v);
        let q_norm = (&w.p + &r0 * gamma).norm();
        let delta = k.delta(q_norm);
        let eps = delta;
        if (info.eps - eps).abs() > 1e-12 * eps {
            run.step_mismatch += 1;
        }
        let d = step_norm(w, w1);

        // Λ^{k+1}
        let du = (&w1.u - &w.u).norm();
        let dv = (&w1.v - &w.v).norm();
        let dp = (&w1.p - &w.p).norm();
        let lambda = aug_lagrangian(spec, gamma, w1)
            + k.c1 * du * du
            + k.c2 * dv * dv
            + dp * dp / (2.0 * gamma);
        run.lambda_mismatch = run
            .lambda_mismatch
            .max((lambda - next.lambda).abs() / (1.0 + lambda.abs()));
        if let Some(prev) = prev_lambda {
            let excess = lambda - prev + k.c3 * d * d;
            let margin = excess / (1.0 + prev.abs());
            run.worst_descent = run.worst_descent.max(margin);
            if excess > SLACK * (1.0 + prev.abs()) {
                run.descent_violations += 1;
            }
        }

        // Bᵀp^{k+1} + ∇_vG(u^k, v^k) + ∇H(v^k) − γBᵀ(Θ(u^{k+1}) − Θ(u^k))
        let dual = (b.tr_mul(&w1.p) + spec.grad_v_sum(&w.u, &w.v)
            - b.tr_mul(&(spec.omega.value(&w1.u) - spec.omega.value(&w.u))) * gamma)
            .norm();
        let rel = dual / (1.0 + w1.p.norm());
        run.worst_dual = run.worst_dual.max(rel);
        if dual > SLACK * (1.0 + w1.p.norm()) {
            run.dual_violations += 1;
        }

        let xi = xi_oracle(spec, gamma, eps, w, w1);
        let bound = k.h(sigma, q_norm, delta) * d;
        run.worst_cert = run.worst_cert.max((xi - bound) / (1.0 + bound));
        if xi > bound + SLACK * (1.0 + bound) {
            run.cert_violations += 1;
        }

        let tau = k.tau(eps, q_norm);
        run.min_tau = run.min_tau.min(tau - 0.5);
        if tau < 0.5 - SLACK * (1.0 + 1.0 / (2.0 * eps)) {
            run.tau_violations += 1;
        }

        run.steps.push(d);
        run.lambdas.push(lambda);
        prev_lambda = Some(lambda);
        state = next;
    }
    run.seconds = start.elapsed().as_secs_f64();
    run
}

fn summarize<F: Fn(&AuditedRun) -> usize>(runs: &[AuditedRun], count: F) -> (usize, String) {
    let total: usize = runs.iter().map(&count).sum();
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| count(r) > 0)
        .map(|r| format!("{}={}", r.name, count(r)))
        .collect();
    let detail = if bad.is_empty() {
        String::new()
    } else {
        format!(" [{}]", bad.join(", "))
    };
    (total, detail)
}

fn criterion_1(runs: &[AuditedRun]) -> Outcome {
    let (violations, where_) = summarize(runs, |r| r.descent_violations);
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let worst = runs
        .iter()
        .map(|r| r.worst_descent)
        .fold(f64::NEG_INFINITY, f64::max);
    let mismatch = runs.iter().map(|r| r.lambda_mismatch).fold(0.0, f64::max);
    let eps_mismatch: usize = runs.iter().map(|r| r.step_mismatch).sum();
    Outcome {
        id: 1,
        name: "potential descent",
        pass: violations == 0 && slowest <= 60.0 && eps_mismatch == 0,
        detail: format!(
            "{violations} violations over {} runs x {RUN_ITERS} iterations{where_}; \
             max (dLambda + c3 d^2)/(1+|Lambda|) = {worst:.2e}; slowest run {slowest:.2}s (limit 60s); \
             solver vs oracle Lambda rel. diff {mismatch:.1e}; step-size mismatches {eps_mismatch}",
            runs.len()
        ),
    }
}

fn criterion_2(runs: &[AuditedRun]) -> Outcome {
    let (violations, where_) = summarize(runs, |r| r.dual_violations);
    let worst = runs.iter().map(|r| r.worst_dual).fold(0.0, f64::max);
    Outcome {
        id: 2,
        name: "dual identity",
        pass: violations == 0,
        detail: format!(
            "{violations} violations{where_}; max residual/(1+|p|) = {worst:.2e} (tol 1e-8)"
        ),
    }
}

fn criterion_3(runs: &[AuditedRun]) -> Outcome {
    let (cert, where_c) = summarize(runs, |r| r.cert_violations);
    let (tau, where_t) = summarize(runs, |r| r.tau_violations);
    let worst = runs
        .iter()
        .map(|r| r.worst_cert)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_tau = runs.iter().map(|r| r.min_tau).fold(f64::INFINITY, f64::min);
    Outcome {
        id: 3,
        name: "certificate soundness",
        pass: cert == 0 && tau == 0,
        detail: format!(
            "{cert} certificate violations{where_c}, max (|xi| - bound)/(1+bound) = {worst:.2e}; \
             {tau} tau violations{where_t}, min tau - 1/2 = {min_tau:.2e}"
        ),
    }
}

fn criterion_5(runs: &[AuditedRun]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_ratio: f64 = 1.0;
    let mut worst_budget = f64::NEG_INFINITY;
    for r in runs {
        let big_k = r.steps.len();
        let mut running = f64::INFINITY;
        let mut s = Vec::with_capacity(big_k);
        for (k, &d) in r.steps.iter().enumerate() {
            running = running.min(d);
            s.push((k as f64).sqrt() * running);
        }
        // s_k ≤ 1.05 · min_{K/2 ≤ j < k} s_j over the final half
        let mut best = f64::INFINITY;
        let mut ratio: f64 = 1.0;
        for &val in &s[big_k / 2..] {
            if best.is_finite() && val > best {
                ratio = ratio.max(val / best);
            }
            best = best.min(val);
        }
        // Σ_{k≥1} c3 min_{1≤j≤k} d_j² ≤ Λ¹ − min_k Λ^k + 1e-6
        let mut running = f64::INFINITY;
        let mut sum = 0.0;
        for &d in &r.steps[1..] {
            running = running.min(d);
            sum += r.c3 * running * running;
        }
        let lambda_1 = r.lambdas[0];
        let lambda_min = r.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        let excess = sum - (lambda_1 - lambda_min);
        worst_ratio = worst_ratio.max(ratio);
        worst_budget = worst_budget.max(excess);
        let mut why = Vec::new();
        if ratio > 1.05 {
            why.push(format!("sqrt(k) ratio {ratio:.4}"));
        }
        if excess > 1e-6 {
            why.push(format!("budget excess {excess:.2e}"));
        }
        if !why.is_empty() {
            failures.push(format!("{}: {}", r.name, why.join(", ")));
        }
    }
    Outcome {
        id: 5,
        name: "o(1/sqrt k) signature",
        pass: failures.is_empty(),
        detail: format!(
            "max tail ratio {worst_ratio:.4} (band 1.05); max budget excess {worst_budget:.2e} (tol 1e-6){}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    }
}

// ---------------------------------------------------------------------------
// Convex QP.

struct QpRun {
    spec: ProblemSpec,
    result: SolveResult,
    u_star: DVector<f64>,
    v_star: DVector<f64>,
}

impl QpRun {
    fn new(seed: u64) -> Self {
        let inst = SharingInstance::generate(SharingParams::convex_qp(seed)).expect("qp instance");
        let spec = inst.to_spec().expect("qp spec");
        let (m, n) = (inst.params.m, inst.params.n());
        let a = DMatrix::from_fn(m, n, |i, j| inst.a[i][j]);
        let q = DMatrix::from_fn(m, m, |i, j| inst.q[i][j]);
        let b = DVector::from_column_slice(&inst.target);
        // min ½(Au − b)ᵀQ(Au − b): AᵀQA u = AᵀQb, v = Au
        let lhs = a.transpose() * &q * &a;
        let rhs = a.transpose() * &q * &b;
        let u_star = lhs.cholesky().expect("AᵀQA positive definite").solve(&rhs);
        let v_star = &a * &u_star;

        let mut config = SolverConfig::for_spec(&spec).expect("config");
        config.max_iters = 100_000;
        config.feas_tol = 1e-6;
        config.cert_tol = 1e-5;
        let result = solve(&spec, config).expect("qp solve");
        Self {
            spec,
            result,
            u_star,
            v_star,
        }
    }
}

fn criterion_4(qp: &QpRun) -> Outcome {
    let spec = &qp.spec;
    let res = &qp.result;
    let w = &res.final_iterate;
    let gamma = res.gamma;
    let r = residual(spec, &w.u, &w.v);
    let y = &w.p + &r * gamma;
    // L_γ is smooth here, so ∂L_γ is its gradient.
    let g_u = spec.coupling.grad_u(&w.u, &w.v) + spec.omega.jacobian(&w.u).tr_mul(&y);
    let g_v = spec.grad_v_sum(&w.u, &w.v) + spec.b().tr_mul(&y);
    let grad = (g_u.norm_squared() + g_v.norm_squared() + r.norm_squared()).sqrt();
    let feas = r.norm();
    let du = (&w.u - &qp.u_star).amax();
    let dv = (&w.v - &qp.v_star).amax();
    let pass = res.iterations <= 100_000 && feas <= 1e-6 && grad <= 1e-5 && du.max(dv) <= 1e-4;
    Outcome {
        id: 4,
        name: "convergence on convex QP",
        pass,
        detail: format!(
            "{:?} after {} iterations; feasibility {feas:.2e} (tol 1e-6); |grad L_gamma| {grad:.2e} (tol 1e-5); \
             inf-distance to KKT solution u {du:.2e}, v {dv:.2e} (tol 1e-4)",
            res.termination, res.iterations
        ),
    }
}

fn criterion_6(qp: &QpRun) -> Outcome {
    let trace = &qp.result.trace;
    let last = trace.last().expect("trace");
    let k_end = last.k as f64;
    let (lo, hi) = (
        (0.5 * k_end).ceil() as usize,
        (0.9 * k_end).floor() as usize,
    );
    let lambda_star = last.lambda - 4.0 * f64::EPSILON * last.lambda.abs();
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|r| r.k >= lo && r.k <= hi)
        .map(|r| (r.k as f64, r.lambda - lambda_star))
        .collect();
    let positive = pts.iter().all(|&(_, g)| g > 0.0);
    let (slope, r2) = if positive && pts.len() >= 3 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &(x, g) in &pts {
            let (dx, dy) = (x - mx, g.ln() - my);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        (sxy / sxx, sxy * sxy / (sxx * syy))
    } else {
        (f64::NAN, f64::NAN)
    };
    Outcome {
        id: 6,
        name: "R-linear rate on convex QP",
        pass: r2 > 0.99 && slope < 0.0,
        detail: format!(
            "window [{lo}, {hi}] of {} iterations; slope {slope:.4e} (alpha {:.6}); R^2 {r2:.6} (need > 0.99)",
            last.k,
            slope.exp()
        ),
    }
}

// ---------------------------------------------------------------------------
// Prox oracle.

fn penalty(kind: &Regularizer, z: f64) -> f64 {
    let a = z.abs();
    match *kind {
        Regularizer::Zero => 0.0,
        Regularizer::L1 { lambda } => lambda * a,
        Regularizer::Scad { lambda, a: s } => {
            if a <= lambda {
                lambda * a
            } else if a <= s * lambda {
                (2.0 * s * lambda * a - a * a - lambda * lambda) / (2.0 * (s - 1.0))
            } else {
                lambda * lambda * (s + 1.0) / 2.0
            }
        }
        Regularizer::Mcp { lambda, theta } => {
            if a <= theta * lambda {
                lambda * a - a * a / (2.0 * theta)
            } else {
                theta * lambda * lambda / 2.0
            }
        }
        Regularizer::CappedL1 { lambda, alpha } => lambda * a.min(alpha),
    }
}

fn slope_bound(kind: &Regularizer) -> f64 {
    match *kind {
        Regularizer::Zero => 0.0,
        Regularizer::L1 { lambda }
        | Regularizer::Scad { lambda, .. }
        | Regularizer::Mcp { lambda, .. }
        | Regularizer::CappedL1 { lambda, .. } => lambda,
    }
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Global minimizer of `(z − x)²/(2t) + P(z)` on `[lo, hi]` by dense grid,
/// golden-section refinement of every grid-local minimum, and the kinks.
fn prox_oracle(kind: &Regularizer, t: f64, x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let f = |z: f64| (z - x) * (z - x) / (2.0 * t) + penalty(kind, z);
    // Any minimizer satisfies |z − x| ≤ t·sup|P′| or sits on the box boundary.
    let reach = t * slope_bound(kind) + 1e-3;
    let (a, b) = (lo.max(x - reach), hi.min(x + reach));
    if a > b {
        let z = if lo > x { lo } else { hi };
        return (z, f(z));
    }
    const POINTS: usize = 4001;
    let h = (b - a) / (POINTS - 1) as f64;
    let grid: Vec<f64> = (0..POINTS).map(|i| a + h * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&z| f(z)).collect();
    let mut cands = vec![a, b];
    for i in 0..POINTS {
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < POINTS {
            vals[i + 1]
        } else {
            f64::INFINITY
        };
        if vals[i] <= left && vals[i] <= right {
            let za = grid[i.saturating_sub(1)];
            let zb = grid[(i + 1).min(POINTS - 1)];
            cands.push(golden(&f, za, zb));
        }
    }
    let kinks: Vec<f64> = match *kind {
        Regularizer::Zero => vec![],
        Regularizer::L1 { .. } => vec![0.0],
        Regularizer::Scad { lambda, a } => vec![0.0, lambda, -lambda, a * lambda, -a * lambda],
        Regularizer::Mcp { lambda, theta } => vec![0.0, theta * lambda, -theta * lambda],
        Regularizer::CappedL1 { alpha, .. } => vec![0.0, alpha, -alpha],
    };
    cands.extend(kinks.into_iter().filter(|&z| z >= a && z <= b));
    cands
        .into_iter()
        .map(|z| (z, f(z)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("nonempty")
}

fn draw_kind(rng: &mut ChaCha8Rng, which: usize) -> (Regularizer, f64) {
    let lambda = rng.gen_range(0.05..2.0);
    match which {
        0 => (Regularizer::Zero, rng.gen_range(0.01..5.0)),
        1 => (Regularizer::L1 { lambda }, rng.gen_range(0.01..5.0)),
        2 => {
            let a = rng.gen_range(2.1..5.0);
            (
                Regularizer::Scad { lambda, a },
                rng.gen_range(0.01..0.99) * (a - 1.0),
            )
        }
        3 => {
            let theta = rng.gen_range(1.1..5.0);
            (
                Regularizer::Mcp { lambda, theta },
                rng.gen_range(0.01..0.99) * theta,
            )
        }
        _ => {
            let alpha = rng.gen_range(0.1..3.0);
            (
                Regularizer::CappedL1 { lambda, alpha },
                rng.gen_range(0.01..5.0),
            )
        }
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let names = ["zero", "l1", "scad", "mcp", "capped_l1"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut per_kind = Vec::new();
    let mut total_bad = 0;
    for (which, name) in names.iter().enumerate() {
        let mut bad = 0;
        for _ in 0..1000 {
            let (kind, t) = draw_kind(&mut rng, which);
            let x = rng.gen_range(-6.0..6.0);
            let (lo, hi) = if rng.gen_bool(0.5) {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                let a: f64 = rng.gen_range(-5.0..5.0);
                let b: f64 = rng.gen_range(-5.0..5.0);
                (a.min(b), a.max(b))
            };
            let z = prox_separable(&kind, t, x, lo, hi).expect("prox");
            let (z_or, f_or) = prox_oracle(&kind, t, x, lo, hi);
            let f_z = (z - x) * (z - x) / (2.0 * t) + penalty(&kind, z);
            let inside = z >= lo && z <= hi;
            if !inside || !((z - z_or).abs() <= 1e-6 || f_z - f_or <= 1e-10) {
                bad += 1;
            }
        }
        total_bad += bad;
        per_kind.push(format!("{name} {bad}"));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 7,
        name: "prox oracle equivalence",
        pass: total_bad == 0 && secs <= 30.0,
        detail: format!(
            "mismatches per 1000 draws: {}; {secs:.2}s (limit 30s)",
            per_kind.join(", ")
        ),
    }
}

// ---------------------------------------------------------------------------

fn tiny_instance() -> ProblemSpec {
    SharingInstance::generate(SharingParams::new(1, 1, 1, 0.5, 1))
        .and_then(|i| i.to_spec())
        .expect("tiny instance")
}

fn criterion_8(base: &[(String, ProblemSpec)]) -> Outcome {
    let mut failing = Vec::new();
    let qp = SharingInstance::generate(SharingParams::convex_qp(1))
        .and_then(|i| i.to_spec())
        .expect("qp");
    let tiny = tiny_instance();
    let mut all: Vec<(&str, &ProblemSpec)> = base.iter().map(|(n, s)| (n.as_str(), s)).collect();
    all.push(("convex-qp", &qp));
    all.push(("tiny-sharing", &tiny));
    for (i, (name, spec)) in all.iter().enumerate() {
        let grads = check_gradients(spec, 100, 100 + i as u64);
        let descent = check_descent_inequalities(spec, 1000, 200 + i as u64);
        for (kind, report) in [("gradient", &grads), ("descent", &descent)] {
            for c in report
                .checks
                .iter()
                .filter(|c| c.outcome == CheckOutcome::Fail)
            {
                failing.push(format!("{name} {kind} {}: {}", c.name, c.detail));
            }
        }
    }
    Outcome {
        id: 8,
        name: "gradient and descent checks",
        pass: failing.is_empty(),
        detail: if failing.is_empty() {
            format!("{} instances: all finite-difference (100 points) and descent (1000 samples) checks pass", all.len())
        } else {
            failing.join("; ")
        },
    }
}

fn criterion_9(instances: &[(String, ProblemSpec)]) -> Outcome {
    let mut differing = Vec::new();
    for (name, spec) in instances {
        let bytes = |workers: usize| {
            let mut config = SolverConfig::for_spec(spec).expect("config");
            config.max_iters = RUN_ITERS;
            config.feas_tol = f64::MIN_POSITIVE;
            config.cert_tol = f64::MIN_POSITIVE;
            config.workers = workers;
            let res = solve(spec, config).expect("solve");
            let mut buf = Vec::new();
            write_trace_to(&mut buf, &res.trace).expect("write trace");
            buf
        };
        let (one, eight) = (bytes(1), bytes(8));
        if one != eight {
            differing.push(name.clone());
        }
    }
    Outcome {
        id: 9,
        name: "determinism across worker counts",
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!(
                "{} runs: traces with 1 and 8 workers are byte-identical",
                instances.len()
            )
        } else {
            format!("traces differ for {}", differing.join(", "))
        },
    }
}

fn criterion_10() -> Outcome {
    let spec = tiny_instance();
    let mut config = SolverConfig::for_spec(&spec).expect("config");
    config.max_iters = 100_000;
    config.feas_tol = 1e-10;
    config.cert_tol = 1e-9;
    let gamma = config.gamma;
    let res = solve(&spec, config).expect("solve");
    let w = &res.final_iterate;

    let box_ = &spec.blocks[0].bounds;
    let (ulo, uhi) = (box_.lower[0], box_.upper[0]);
    let vmax = ulo.abs().max(uhi.abs()) * spec.l_theta + 0.1;
    let step = 2.5e-3;
    let grid = GridSpec {
        u_axes: vec![Axis::with_step(ulo, uhi, step)],
        v_axes: vec![Axis::with_step(-vmax, vmax, step)],
        gamma,
        threshold: 0.05,
        merge_radius: 0.02,
    };
    let cands = brute_force_stationary(&spec, &grid).expect("grid search");
    let nearest = cands
        .iter()
        .map(|c| c.distance(&w.u, &w.v))
        .fold(f64::INFINITY, f64::min);
    Outcome {
        id: 10,
        name: "tiny-instance stationarity",
        pass: res.termination == Termination::Converged && nearest <= 1e-2,
        detail: format!(
            "limit (u, v) = ({:.5}, {:.5}) after {} iterations ({:?}); {} grid candidates at step {step}; \
             nearest at distance {nearest:.2e} (tol 1e-2)",
            w.u[0],
            w.v[0],
            res.iterations,
            res.termination,
            cands.len()
        ),
    }
}
