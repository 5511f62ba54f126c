//! The iteration engine: parameter selection, the three updates, stopping
//! and trace production.
//!
//! One step from `w^k = (u^k, v^k, p^k)`:
//!
//! ```text
//! q^k     = p^k + γ(Θ(u^k) + Bv^k)
//! u^{k+1} = argmin_{u ∈ U} ⟨∇_uG(w^k) + ∇Ω(u^k)ᵀq^k, u⟩ + J(u) + ⟨q^k, Φ(u)⟩ + D(u, u^k)/ε^k
//! v^{k+1} = v^k − (1/γ)(BᵀB)⁻¹(∇_vG(w^k) + ∇H(v^k) + Bᵀq^k)
//! p^{k+1} = p^k + γ(Θ(u^{k+1}) + Bv^{k+1})
//! ```

use std::time::Instant;

use log::{debug, warn};
use nalgebra::DVector;
use rayon::{ThreadPool, ThreadPoolBuilder};
use serde::{Deserialize, Serialize};

use crate::bregman::BregmanKernel;
use crate::diagnostics::{
    certificate_h_from_constants, check_kernel, delta_from_constants, dual_identity_residual,
    estimate_rate, potential, tau, xi_from_evals, CertificateRecord, PointEval, PotentialConstants,
    RateEstimate,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{image_preimage, solve_gram, GramFactorization};
use crate::model::{validate_problem, Iterate, ProblemConstants, ProblemSpec, RANK_TOL};
use crate::prox::{solve_u_subproblem_with, BlockSolverFn, BlockSolverRegistry};
use crate::trace::TraceRecord;

/// Choice of `ε^k ∈ [σδ_k, δ_k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    /// `ε^k = δ_k`.
    Upper,
    /// `ε^k = σδ_k`.
    Lower,
    /// `ε^k = ρδ_k` with `ρ ∈ [σ, 1]`.
    Fraction(f64),
}

impl EpsRule {
    pub fn validate(&self, sigma: f64) -> Result<()> {
        if let EpsRule::Fraction(rho) = *self {
            if !(rho >= sigma && rho <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "eps fraction {rho} must lie in [sigma, 1] = [{sigma}, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn select(&self, sigma: f64, delta: f64) -> f64 {
        let eps = match *self {
            EpsRule::Upper => delta,
            EpsRule::Lower => sigma * delta,
            EpsRule::Fraction(rho) => rho * delta,
        };
        eps.clamp(sigma * delta, delta)
    }
}

/// Which trace rows are kept in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRetention {
    Full,
    /// Rows with `k` divisible by the stride, plus the last row.
    Stride(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub sigma: f64,
    pub eps_rule: EpsRule,
    pub max_iters: usize,
    pub feas_tol: f64,
    pub cert_tol: f64,
    pub kernel: BregmanKernel,
    pub workers: usize,
    pub retention: TraceRetention,
    /// When false the `wall_ms` column is zero, making traces reproducible byte for byte.
    pub record_wall_time: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            sigma: 0.5,
            eps_rule: EpsRule::Upper,
            max_iters: 10_000,
            feas_tol: 1e-6,
            cert_tol: 1e-6,
            kernel: BregmanKernel::Euclidean,
            workers: 1,
            retention: TraceRetention::Full,
            record_wall_time: false,
        }
    }

    /// Defaults with `γ` from [`default_gamma`] at safety 1.05.
    pub fn for_spec(spec: &ProblemSpec) -> Result<Self> {
        Ok(Self::new(default_gamma(spec, DEFAULT_SAFETY)?))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            ));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.feas_tol > 0.0) || !(self.cert_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.retention == TraceRetention::Stride(0) {
            return bad("trace stride must be at least 1".into());
        }
        self.eps_rule.validate(self.sigma)?;
        self.kernel.validate()
    }
}

/// Default inflation of the `γ` lower bound.
pub const DEFAULT_SAFETY: f64 = 1.05;

/// `safety · (√57 + 1)/(2λ_min(BᵀB)) · (L_G + L_H)`, or `safety` when `L_G + L_H = 0`.
pub fn default_gamma(spec: &ProblemSpec, safety: f64) -> Result<f64> {
    let s = spec.spectral();
    if s.singular || !(s.lambda_min > RANK_TOL * s.b_norm * s.b_norm) {
        return Err(Error::SingularGram {
            lambda_min: s.lambda_min,
        });
    }
    default_gamma_from_constants(&spec.constants(), safety)
}

pub fn default_gamma_from_constants(k: &ProblemConstants, safety: f64) -> Result<f64> {
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "safety factor must be >= 1, got {safety}"
        )));
    }
    if !(k.lambda_min > 0.0) {
        return Err(Error::SingularGram {
            lambda_min: k.lambda_min,
        });
    }
    if k.l_g + k.l_h == 0.0 {
        Ok(safety)
    } else {
        Ok(safety * k.gamma_bound())
    }
}

/// `δ_k` for the current `‖q^k‖`.
pub fn step_size_delta(spec: &ProblemSpec, gamma: f64, q_norm: f64, beta: f64) -> f64 {
    delta_from_constants(&spec.constants(), gamma, q_norm, beta)
}

/// `q = p + γ(Θ(u) + Bv)`, cached on the iterate.
pub fn compute_q(spec: &ProblemSpec, w: &mut Iterate, gamma: f64) -> Result<DVector<f64>> {
    w.check(spec)?;
    let q = &w.p + spec.constraint_residual(&w.u, &w.v) * gamma;
    w.q = Some(q.clone());
    Ok(q)
}

/// `v_k − (1/γ)(BᵀB)⁻¹(grad_v_sum + Bᵀq_k)`.
pub fn update_v(
    spec: &ProblemSpec,
    gram: &GramFactorization,
    v_k: &DVector<f64>,
    grad_v_sum: &DVector<f64>,
    q_k: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    spec.check_v(v_k)?;
    check_len("grad_v_sum", spec.d, grad_v_sum.len())?;
    spec.check_p(q_k)?;
    let rhs = grad_v_sum + spec.b().tr_mul(q_k);
    Ok(v_k - solve_gram(gram, &rhs)? / gamma)
}

/// `p_k + γ(Θ(u_next) + Bv_next)`.
pub fn update_p(
    spec: &ProblemSpec,
    p_k: &DVector<f64>,
    u_next: &DVector<f64>,
    v_next: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    spec.check_p(p_k)?;
    spec.check_u(u_next)?;
    spec.check_v(v_next)?;
    Ok(p_k + spec.constraint_residual(u_next, v_next) * gamma)
}

/// Solver state after `k` iterations.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub w: Iterate,
    pub eval: PointEval,
    /// Norms of the step into `w^k`; zero at `k = 0`.
    pub du_norm: f64,
    pub dv_norm: f64,
    pub dp_norm: f64,
    pub l_gamma: f64,
    pub lambda: f64,
    /// Dual-identity residual at `p^k`.
    pub dual_residual: f64,
}

impl SolverState {
    pub fn feas_residual(&self) -> f64 {
        self.eval.residual.norm()
    }
}

/// Quantities of the step `w^k → w^{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub delta: f64,
    pub eps: f64,
    pub q_norm: f64,
    pub step_norm: f64,
    pub certificate: CertificateRecord,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Feasibility and certificate tolerances met.
    Converged,
    MaxIters,
    NumericalBreakdown,
}

/// `k̂ = argmin_j ‖w^j − w^{j+1}‖` and the point `w^{k̂+1}` the certificate applies to.
#[derive(Debug, Clone, PartialEq)]
pub struct BestIterate {
    pub index: usize,
    pub step_norm: f64,
    pub point: Iterate,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_iterate: Iterate,
    pub best: Option<BestIterate>,
    pub termination: Termination,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Measured `sup_k h(u^k, p^k)`.
    pub sup_h: f64,
    pub min_tau: f64,
    pub last_certificate: Option<CertificateRecord>,
    pub rate: Option<RateEstimate>,
    pub breakdown: Option<String>,
    pub gamma: f64,
    pub gamma_bound: f64,
    pub constants: ProblemConstants,
    pub potential: PotentialConstants,
}

/// A configured run over one problem.
pub struct Solver<'a> {
    spec: &'a ProblemSpec,
    config: SolverConfig,
    gram: &'a GramFactorization,
    constants: ProblemConstants,
    potential: PotentialConstants,
    weights: DVector<f64>,
    beta: f64,
    l_k: f64,
    registry: BlockSolverRegistry,
    pool: ThreadPool,
}

impl<'a> Solver<'a> {
    pub fn new(spec: &'a ProblemSpec, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let gram = spec.gram()?;
        let report = validate_problem(spec);
        if report.has_failures() {
            return Err(Error::Configuration(format!("invalid problem:\n{report}")));
        }
        check_kernel(spec, &config.kernel)?;
        let constants = spec.constants();
        let bound = constants.gamma_bound();
        if !(config.gamma > bound) {
            return Err(Error::GammaTooSmall {
                gamma: config.gamma,
                bound,
            });
        }
        let potential = PotentialConstants::from_constants(&constants, config.gamma)?;
        let pool = ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            spec,
            gram,
            constants,
            potential,
            weights: config.kernel.weights(spec.n)?,
            beta: config.kernel.beta(),
            l_k: config.kernel.l_k(),
            registry: BlockSolverRegistry::default(),
            pool,
            config,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    pub fn potential_constants(&self) -> &PotentialConstants {
        &self.potential
    }

    /// Replaces the closed-form subproblem of `block_id` by `solver`.
    pub fn register_block_solver(&mut self, block_id: usize, solver: BlockSolverFn) -> Result<()> {
        if block_id >= self.spec.blocks.len() {
            return Err(Error::InvalidParameter(format!(
                "block {block_id} does not exist ({} blocks)",
                self.spec.blocks.len()
            )));
        }
        self.registry.register(block_id, solver);
        Ok(())
    }

    /// `u⁰` projected onto `U`, `v⁰` the least-squares preimage of `−Θ(u⁰)`, and
    /// `p⁰ = −B(BᵀB)⁻¹(∇_vG(u⁰, v⁰) + ∇H(v⁰))`.
    pub fn initial_state(&self) -> Result<SolverState> {
        let spec = self.spec;
        for (i, block) in spec.blocks.iter().enumerate() {
            if block.phi.is_some() && !self.registry.contains(i) {
                return Err(Error::Configuration(format!(
                    "block {i} has a nonzero Phi_i but no block solver is registered"
                )));
            }
        }
        spec.check_u(&spec.initial_u)?;
        let u = spec.feasible_box().project(&spec.initial_u);
        let theta = spec.theta(&u);
        let pre = image_preimage(self.gram, spec.b(), &(-&theta))?;
        if pre.breach {
            warn!(
                "-Theta(u0) is not in Im(B): least-squares residual {:.3e}",
                pre.residual
            );
        }
        let v = pre.v;
        let g = spec.grad_v_sum(&u, &v);
        let p = -(spec.b() * solve_gram(self.gram, &g)?);
        let eval = PointEval::new(spec, &u, &v);
        let l_gamma = eval.augmented_lagrangian(&p, self.config.gamma);
        let dual_residual = (spec.b().tr_mul(&p) + &g).norm();
        let w = Iterate::new(u, v, p);
        if !w.is_finite() || !l_gamma.is_finite() {
            return Err(Error::NumericalBreakdown {
                iteration: 0,
                detail: "non-finite initial point".into(),
            });
        }
        Ok(SolverState {
            k: 0,
            w,
            eval,
            du_norm: 0.0,
            dv_norm: 0.0,
            dp_norm: 0.0,
            l_gamma,
            lambda: l_gamma,
            dual_residual,
        })
    }

    /// One step `w^k → w^{k+1}`.
    pub fn iterate(&self, state: &SolverState) -> Result<(SolverState, StepInfo)> {
        let spec = self.spec;
        let gamma = self.config.gamma;
        let w = &state.w;
        let at = &state.eval;

        let q = &w.p + &at.residual * gamma;
        let q_norm = q.norm();
        let delta = delta_from_constants(&self.constants, gamma, q_norm, self.beta);
        let eps = self.config.eps_rule.select(self.config.sigma, delta);

        let grad_lin = &at.grad_u_g + at.jac_omega.tr_mul(&q);
        let u = self.pool.install(|| {
            solve_u_subproblem_with(
                spec,
                &self.config.kernel,
                &w.u,
                &grad_lin,
                &q,
                eps,
                &self.registry,
            )
        })?;
        let v = update_v(spec, self.gram, &w.v, &at.grad_v_sum, &q, gamma)?;
        let eval = PointEval::new(spec, &u, &v);
        let p = &w.p + &eval.residual * gamma;
        let next = Iterate::new(u, v, p);

        let breakdown = |detail: &str| Error::NumericalBreakdown {
            iteration: state.k,
            detail: detail.to_string(),
        };
        if !next.is_finite() {
            return Err(breakdown("non-finite iterate"));
        }

        let du_norm = (&next.u - &w.u).norm();
        let dv_norm = (&next.v - &w.v).norm();
        let dp_norm = (&next.p - &w.p).norm();
        let step_norm = (du_norm * du_norm + dv_norm * dv_norm + dp_norm * dp_norm).sqrt();

        let xi = xi_from_evals(spec, &self.weights, gamma, eps, w, at, &next, &eval);
        let h = certificate_h_from_constants(
            &self.constants,
            gamma,
            self.config.sigma,
            q_norm,
            delta,
            self.l_k,
        );
        let certificate = CertificateRecord::new(h, step_norm, &xi);
        let dual_residual =
            dual_identity_residual(spec, gamma, &next.p, &at.grad_v_sum, &at.theta, &eval.theta);
        let tau_k = tau(
            &self.constants,
            &self.potential,
            gamma,
            self.beta,
            eps,
            q_norm,
        );
        let l_gamma = eval.augmented_lagrangian(&next.p, gamma);
        let lambda = potential(l_gamma, du_norm, dv_norm, dp_norm, &self.potential, gamma);
        if !lambda.is_finite() || !certificate.xi_norm.is_finite() {
            return Err(breakdown("non-finite potential or certificate"));
        }

        let info = StepInfo {
            delta,
            eps,
            q_norm,
            step_norm,
            certificate,
            tau: tau_k,
        };
        let next_state = SolverState {
            k: state.k + 1,
            w: next,
            eval,
            du_norm,
            dv_norm,
            dp_norm,
            l_gamma,
            lambda,
            dual_residual,
        };
        Ok((next_state, info))
    }

    fn record(state: &SolverState, step: Option<&StepInfo>, wall_ms: f64) -> TraceRecord {
        let mut r = TraceRecord {
            k: state.k,
            l_gamma: state.l_gamma,
            lambda: state.lambda,
            feas_residual: state.feas_residual(),
            du_norm: state.du_norm,
            dv_norm: state.dv_norm,
            dp_norm: state.dp_norm,
            wall_ms,
            p_norm: state.w.p.norm(),
            dual_residual: state.dual_residual,
            ..Default::default()
        };
        if let Some(s) = step {
            r.delta_k = s.delta;
            r.eps_k = s.eps;
            r.q_norm = s.q_norm;
            r.h = s.certificate.h;
            r.cert_bound = s.certificate.bound;
            r.xi_norm = s.certificate.xi_norm;
        }
        r
    }

    fn keep(&self, k: usize) -> bool {
        match self.config.retention {
            TraceRetention::Full => true,
            TraceRetention::Stride(s) => k.is_multiple_of(s),
        }
    }

    pub fn solve(&self) -> Result<SolveResult> {
        let start = Instant::now();
        let wall = || {
            if self.config.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            }
        };

        let mut state = self.initial_state()?;
        let mut trace = vec![Self::record(&state, None, wall())];
        let mut last_row = trace[0];
        let mut best: Option<BestIterate> = None;
        let mut sup_h: f64 = 0.0;
        let mut min_tau = f64::INFINITY;
        let mut last_certificate = None;
        let mut termination = Termination::MaxIters;
        let mut breakdown = None;

        for _ in 0..self.config.max_iters {
            let (next, info) = match self.iterate(&state) {
                Ok(x) => x,
                Err(Error::NumericalBreakdown { iteration, detail }) => {
                    warn!("numerical breakdown at iteration {iteration}: {detail}");
                    termination = Termination::NumericalBreakdown;
                    breakdown = Some(detail);
                    break;
                }
                Err(e) => return Err(e),
            };
            if best.as_ref().is_none_or(|b| info.step_norm < b.step_norm) {
                best = Some(BestIterate {
                    index: state.k,
                    step_norm: info.step_norm,
                    point: next.w.clone(),
                });
            }
            sup_h = sup_h.max(info.certificate.h);
            min_tau = min_tau.min(info.tau);
            last_certificate = Some(info.certificate);
            last_row = Self::record(&next, Some(&info), wall());
            if self.keep(next.k) {
                trace.push(last_row);
            }
            state = next;
            if state.feas_residual() <= self.config.feas_tol
                && info.certificate.bound <= self.config.cert_tol
            {
                termination = Termination::Converged;
                break;
            }
        }
        if trace.last().map(|r| r.k) != Some(last_row.k) {
            trace.push(last_row);
        }
        debug!(
            "stopped after {} iterations: {termination:?}, feasibility {:.3e}",
            state.k,
            state.feas_residual()
        );

        let rate = if trace.len() >= 50 {
            estimate_rate(&trace, 0.5).ok()
        } else {
            None
        };
        Ok(SolveResult {
            final_iterate: state.w,
            best,
            termination,
            iterations: state.k,
            trace,
            sup_h,
            min_tau,
            last_certificate,
            rate,
            breakdown,
            gamma: self.config.gamma,
            gamma_bound: self.constants.gamma_bound(),
            constants: self.constants,
            potential: self.potential,
        })
    }
}

/// Builds a [`Solver`] and runs it.
pub fn solve(spec: &ProblemSpec, config: SolverConfig) -> Result<SolveResult> {
    Solver::new(spec, config)?.solve()
}
