//! Theory-side quantities attached to the iterates: the potential, the
//! stationarity certificate and its residual, rate estimates, and sampling
//! checks of user-supplied Lipschitz constants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bregman::BregmanKernel;
use crate::error::{check_len, Error, Result};
use crate::linalg::image_preimage;
use crate::model::{Check, CheckOutcome, Iterate, ProblemConstants, ProblemSpec, ValidationReport};
use crate::trace::TraceRecord;

/// Weights of the potential
/// `Λ^k = L_γ(w^k) + c1‖Δu‖² + c2‖Δv‖² + (1/2γ)‖Δp‖²` and its descent modulus `c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl PotentialConstants {
    pub fn from_constants(k: &ProblemConstants, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(k.lambda_min > 0.0) {
            return Err(Error::SingularGram {
                lambda_min: k.lambda_min,
            });
        }
        let gl = gamma * k.lambda_min;
        let lgh = k.l_g + k.l_h;
        let c1 = 7.0 * (k.l_g + gamma * k.b_norm * k.l_theta).powi(2) / gl;
        let c2 = 7.0 * lgh * lgh / gl;
        let c4 = (gl - lgh) / 2.0 - c2;
        let scale = gl.abs() + lgh.abs() + c2.abs();
        if !(c4 > 4.0 * f64::EPSILON * scale) {
            return Err(Error::GammaTooSmall {
                gamma,
                bound: k.gamma_bound(),
            });
        }
        let c3 = 0.5f64.min(c4).min(1.0 / (3.0 * gamma));
        Ok(Self { c1, c2, c3, c4 })
    }
}

pub fn potential_constants(spec: &ProblemSpec, gamma: f64) -> Result<PotentialConstants> {
    PotentialConstants::from_constants(&spec.constants(), gamma)
}

/// `Λ = L_γ + c1 du² + c2 dv² + dp²/(2γ)`.
pub fn potential(
    l_gamma: f64,
    du_norm: f64,
    dv_norm: f64,
    dp_norm: f64,
    consts: &PotentialConstants,
    gamma: f64,
) -> f64 {
    l_gamma
        + consts.c1 * du_norm * du_norm
        + consts.c2 * dv_norm * dv_norm
        + dp_norm * dp_norm / (2.0 * gamma)
}

/// Step-size ceiling `δ_k`.
pub fn delta_from_constants(k: &ProblemConstants, gamma: f64, q_norm: f64, beta: f64) -> f64 {
    let lam = k.lambda_min;
    let lt2 = k.l_theta * k.l_theta;
    let denom = k.l_g
        + q_norm * k.l_omega
        + gamma * lt2
        + 14.0 * gamma * k.b_norm * k.b_norm * lt2 / lam
        + 14.0 * (k.l_g + gamma * k.b_norm * k.l_theta).powi(2) / (gamma * lam)
        + 1.0;
    beta / denom
}

/// `h(u^k, p^k)`, the constant of the certificate `dist(0, ∂L_γ(w^{k+1})) ≤ h ‖w^k − w^{k+1}‖`.
pub fn certificate_h_from_constants(
    k: &ProblemConstants,
    gamma: f64,
    sigma: f64,
    q_norm: f64,
    delta_k: f64,
    l_k: f64,
) -> f64 {
    let b1 = 2.0 * k.l_g
        + q_norm * k.l_omega
        + gamma * k.b_norm * k.l_theta
        + gamma * k.l_theta * k.l_theta
        + l_k / (sigma * delta_k);
    let b2 = 2.0 * k.l_g + k.l_h + gamma * k.b_norm * k.l_theta;
    let b3 = k.l_theta + k.b_norm + 1.0 / gamma;
    b1.max(b2).max(b3)
}

pub fn certificate_h(
    spec: &ProblemSpec,
    gamma: f64,
    sigma: f64,
    q_norm: f64,
    delta_k: f64,
    l_k: f64,
) -> f64 {
    certificate_h_from_constants(&spec.constants(), gamma, sigma, q_norm, delta_k, l_k)
}

/// `τ_k = β/(2ε) − (L_G + ‖q‖L_Ω + γ(L⁰_Θ)²)/2 − 7γ‖B‖²(L⁰_Θ)²/λ_min − c1`.
pub fn tau(
    k: &ProblemConstants,
    pc: &PotentialConstants,
    gamma: f64,
    beta: f64,
    eps: f64,
    q_norm: f64,
) -> f64 {
    let lt2 = k.l_theta * k.l_theta;
    beta / (2.0 * eps)
        - (k.l_g + q_norm * k.l_omega + gamma * lt2) / 2.0
        - 7.0 * gamma * k.b_norm * k.b_norm * lt2 / k.lambda_min
        - pc.c1
}

/// Everything evaluated at one primal point `(u, v)`.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub theta: DVector<f64>,
    /// `Θ(u) + Bv`.
    pub residual: DVector<f64>,
    pub jac_omega: DMatrix<f64>,
    pub jac_theta: DMatrix<f64>,
    pub grad_u_g: DVector<f64>,
    /// `∇_vG(u, v) + ∇H(v)`.
    pub grad_v_sum: DVector<f64>,
    pub objective: f64,
}

impl PointEval {
    pub fn new(spec: &ProblemSpec, u: &DVector<f64>, v: &DVector<f64>) -> Self {
        let theta = spec.theta(u);
        let residual = &theta + spec.b() * v;
        let jac_omega = spec.omega.jacobian(u);
        let jac_theta = if spec.has_phi() {
            &jac_omega + spec.phi_jacobian(u)
        } else {
            jac_omega.clone()
        };
        Self {
            residual,
            theta,
            jac_omega,
            jac_theta,
            grad_u_g: spec.coupling.grad_u(u, v),
            grad_v_sum: spec.grad_v_sum(u, v),
            objective: spec.objective(u, v),
        }
    }

    /// `L_γ` at `(u, v, p)`.
    pub fn augmented_lagrangian(&self, p: &DVector<f64>, gamma: f64) -> f64 {
        self.objective + p.dot(&self.residual) + 0.5 * gamma * self.residual.norm_squared()
    }
}

/// The subgradient `ξ = (ξ_u, ξ_v, ξ_p) ∈ ∂L_γ(w^{k+1})` built from one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Xi {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub p: DVector<f64>,
}

impl Xi {
    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.v.norm_squared() + self.p.norm_squared()).sqrt()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn xi_from_evals(
    spec: &ProblemSpec,
    kernel_weights: &DVector<f64>,
    gamma: f64,
    eps: f64,
    w_k: &Iterate,
    at_k: &PointEval,
    w_next: &Iterate,
    at_next: &PointEval,
) -> Xi {
    let b = spec.b();
    let q = &w_k.p + &at_k.residual * gamma;
    let dp = &w_next.p - &w_k.p;
    let dr = &at_next.residual - &at_k.residual;
    let du = &w_next.u - &w_k.u;
    let dv = &w_next.v - &w_k.v;

    let mut xi_u = &at_next.grad_u_g - &at_k.grad_u_g;
    xi_u += (&at_next.jac_omega - &at_k.jac_omega).tr_mul(&q);
    xi_u += at_next.jac_theta.tr_mul(&(&dp + &dr * gamma));
    xi_u -= kernel_weights.component_mul(&du) / eps;

    let mut xi_v = &at_next.grad_v_sum - &at_k.grad_v_sum;
    xi_v += b.tr_mul(&(&dp + &dr * gamma));
    xi_v -= b.tr_mul(&(b * dv)) * gamma;

    Xi {
        u: xi_u,
        v: xi_v,
        p: dp / gamma,
    }
}

/// `ξ` for the step `w_k → w_next` taken with step `eps_k`.
pub fn residual_xi(
    spec: &ProblemSpec,
    kernel: &BregmanKernel,
    gamma: f64,
    w_k: &Iterate,
    w_next: &Iterate,
    eps_k: f64,
) -> Result<Xi> {
    w_k.check(spec)?;
    w_next.check(spec)?;
    if !(eps_k > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(
            "eps and gamma must be positive".into(),
        ));
    }
    let weights = kernel.weights(spec.n)?;
    let at_k = PointEval::new(spec, &w_k.u, &w_k.v);
    let at_next = PointEval::new(spec, &w_next.u, &w_next.v);
    Ok(xi_from_evals(
        spec, &weights, gamma, eps_k, w_k, &at_k, w_next, &at_next,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub h: f64,
    /// `h ‖w^k − w^{k+1}‖`.
    pub bound: f64,
    pub xi_norm: f64,
    pub xi_u_norm: f64,
    pub xi_v_norm: f64,
    pub xi_p_norm: f64,
}

impl CertificateRecord {
    pub fn new(h: f64, step_norm: f64, xi: &Xi) -> Self {
        Self {
            h,
            bound: h * step_norm,
            xi_norm: xi.norm(),
            xi_u_norm: xi.u.norm(),
            xi_v_norm: xi.v.norm(),
            xi_p_norm: xi.p.norm(),
        }
    }

    pub fn is_sound(&self) -> bool {
        self.xi_norm <= self.bound + 1e-8 * (1.0 + self.bound)
    }
}

/// `‖ξ‖ ≤ ε`, inclusive.
pub fn is_epsilon_stationary(cert: &CertificateRecord, epsilon: f64) -> bool {
    cert.xi_norm <= epsilon
}

/// `‖Bᵀp⁺ + ∇_vG(u, v) + ∇H(v) − γBᵀ(Θ(u⁺) − Θ(u))‖`.
pub fn dual_identity_residual(
    spec: &ProblemSpec,
    gamma: f64,
    p_next: &DVector<f64>,
    grad_v_sum: &DVector<f64>,
    theta: &DVector<f64>,
    theta_next: &DVector<f64>,
) -> f64 {
    let b = spec.b();
    (b.tr_mul(p_next) + grad_v_sum - b.tr_mul(&(theta_next - theta)) * gamma).norm()
}

/// `F(u, ṽ) + (5γλ_min − 7(L_G + L_H))/(14‖B‖²) ‖Θ(u) + Bv‖²` with `Bṽ = −Θ(u)`,
/// a lower bound on `Λ` at any iterate `(u, v)`.
pub fn lambda_lower_bound(
    spec: &ProblemSpec,
    gamma: f64,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    spec.check_u(u)?;
    spec.check_v(v)?;
    let k = spec.constants();
    let theta = spec.theta(u);
    let v_tilde = image_preimage(spec.gram()?, spec.b(), &(-&theta))?.v;
    let r = theta + spec.b() * v;
    let coef = (5.0 * gamma * k.lambda_min - 7.0 * (k.l_g + k.l_h)) / (14.0 * k.b_norm * k.b_norm);
    Ok(spec.objective(u, &v_tilde) + coef * r.norm_squared())
}

/// `(Σ_{k≥1} c3 min_{1≤j≤k} ‖Δw^j‖², Λ¹ − min_k Λ^k)` over an unstrided trace.
pub fn telescoping_budget(trace: &[TraceRecord], c3: f64) -> (f64, f64) {
    let mut running = f64::INFINITY;
    let mut sum = 0.0;
    for r in trace.iter().filter(|r| r.k >= 1) {
        running = running.min(r.step_norm());
        sum += c3 * running * running;
    }
    let first = trace
        .iter()
        .find(|r| r.k == 1)
        .map_or(f64::NAN, |r| r.lambda);
    let min = trace
        .iter()
        .filter(|r| r.k >= 1)
        .map(|r| r.lambda)
        .fold(f64::INFINITY, f64::min);
    (sum, first - min)
}

/// Invariant violations recounted from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceAudit {
    pub rows: usize,
    pub descent: usize,
    pub certificate: usize,
    pub dual_identity: usize,
}

impl TraceAudit {
    pub fn total(&self) -> usize {
        self.descent + self.certificate + self.dual_identity
    }
}

/// Recounts the descent margin, certificate soundness and dual identity.
///
/// Consecutive rows are checked against `−c3‖Δw‖²`; rows further apart (a
/// strided trace) only against monotonicity.
pub fn audit_trace(trace: &[TraceRecord], c3: f64) -> TraceAudit {
    let mut audit = TraceAudit {
        rows: trace.len(),
        ..Default::default()
    };
    for pair in trace.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let slack = 1e-8 * (1.0 + a.lambda.abs());
        let margin = if b.k == a.k + 1 {
            -c3 * b.step_norm() * b.step_norm()
        } else {
            0.0
        };
        if !(b.lambda - a.lambda <= margin + slack) {
            audit.descent += 1;
        }
    }
    for r in trace {
        if r.k >= 1 && !(r.xi_norm <= r.cert_bound + 1e-8 * (1.0 + r.cert_bound)) {
            audit.certificate += 1;
        }
        if !(r.dual_residual <= 1e-8 * (1.0 + r.p_norm)) {
            audit.dual_identity += 1;
        }
    }
    audit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatus {
    /// Tail fit of `log(Λ^k − Λ*)` is linear with negative slope.
    Geometric,
    NonGeometric,
    /// Gaps reached round-off before or inside the fit window.
    BelowFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub status: RateStatus,
    /// Estimated Q-rate `exp(slope)`.
    pub alpha: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    /// Inclusive iteration window of the fit.
    pub window: (usize, usize),
    pub lambda_star: f64,
    /// Largest ratio `s_k / min_{j<k} s_j` over the last half of the run, with
    /// `s_k = √k min_{j≤k} ‖w^{j−1} − w^j‖`.
    pub sqrt_k_ratio: f64,
    /// `sqrt_k_ratio ≤ 1.05`.
    pub sqrt_k_decreasing: bool,
}

/// `R²` threshold for the geometric verdict.
pub const GEOMETRIC_R2: f64 = 0.99;
/// Relative band of the `o(1/√k)` check.
pub const SQRT_K_BAND: f64 = 0.05;

/// `s_k = √k · min_{1≤j≤k} ‖Δw^j‖` for every row with `k ≥ 1`.
pub fn sqrt_k_min_steps(trace: &[TraceRecord]) -> Vec<(usize, f64)> {
    let mut running = f64::INFINITY;
    trace
        .iter()
        .filter(|r| r.k >= 1)
        .map(|r| {
            running = running.min(r.step_norm());
            (r.k, (r.k as f64).sqrt() * running)
        })
        .collect()
}

/// Largest `s_k / min_{j<k} s_j` for `k` in the final half of the run.
pub fn sqrt_k_tail_ratio(trace: &[TraceRecord]) -> f64 {
    let s = sqrt_k_min_steps(trace);
    let Some(&(k_end, _)) = s.last() else {
        return 1.0;
    };
    let mut best = f64::INFINITY;
    let mut worst: f64 = 1.0;
    for &(_, val) in s.iter().filter(|(k, _)| 2 * k >= k_end) {
        if best.is_finite() {
            let ratio = if val <= best {
                1.0
            } else if best > 0.0 {
                val / best
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
        }
        best = best.min(val);
    }
    worst
}

/// Fits `log(Λ^k − Λ*)` over `[(1 − f)K, (1 − f/5)K]` with `Λ*` the final
/// potential lowered by a round-off guard.
pub fn estimate_rate(trace: &[TraceRecord], tail_fraction: f64) -> Result<RateEstimate> {
    if trace.len() < 50 {
        return Err(Error::InvalidParameter(format!(
            "rate estimation needs at least 50 rows, got {}",
            trace.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    let last = trace.last().expect("nonempty");
    let k_end = last.k as f64;
    let lo = ((1.0 - tail_fraction) * k_end).ceil() as usize;
    let hi = ((1.0 - tail_fraction / 5.0) * k_end).floor() as usize;
    let lambda_final = last.lambda;
    let lambda_star = lambda_final - (4.0 * f64::EPSILON * lambda_final.abs() + f64::MIN_POSITIVE);
    let sqrt_k_ratio = sqrt_k_tail_ratio(trace);

    let mut floor = false;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in trace.iter().filter(|r| r.k >= lo && r.k <= hi) {
        let gap = r.lambda - lambda_star;
        let guard = 4.0 * f64::EPSILON * r.lambda.abs().max(lambda_final.abs()) + f64::MIN_POSITIVE;
        if !(gap > guard) {
            floor = true;
            break;
        }
        xs.push(r.k as f64);
        ys.push(gap.ln());
    }
    let base = RateEstimate {
        status: RateStatus::BelowFloor,
        alpha: None,
        slope: None,
        r_squared: None,
        window: (lo, hi),
        lambda_star,
        sqrt_k_ratio,
        sqrt_k_decreasing: sqrt_k_ratio <= 1.0 + SQRT_K_BAND,
    };
    if floor || xs.len() < 3 {
        return Ok(base);
    }
    let (slope, r2) = linear_fit(&xs, &ys);
    let status = if r2 > GEOMETRIC_R2 && slope < 0.0 {
        RateStatus::Geometric
    } else {
        RateStatus::NonGeometric
    };
    Ok(RateEstimate {
        status,
        alpha: Some(slope.exp()),
        slope: Some(slope),
        r_squared: Some(r2),
        ..base
    })
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

/// Default half-width of the sampling box.
pub const SAMPLE_HALF_WIDTH: f64 = 5.0;
const VIOLATION_TOL: f64 = 1e-8;

struct Tally {
    name: &'static str,
    max_violation: f64,
    flagged: usize,
    samples: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            max_violation: 0.0,
            flagged: 0,
            samples: 0,
        }
    }

    /// Records `excess = lhs − rhs` of an inequality `lhs ≤ rhs`.
    fn record(&mut self, excess: f64, scale: f64) {
        self.samples += 1;
        let excess = if excess.is_nan() {
            f64::INFINITY
        } else {
            excess
        };
        self.max_violation = self.max_violation.max(excess.max(0.0));
        if excess > VIOLATION_TOL * scale {
            self.flagged += 1;
        }
    }

    fn into_check(self) -> Check {
        Check {
            name: self.name.to_string(),
            outcome: if self.flagged == 0 {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            detail: format!("{} of {} samples violate", self.flagged, self.samples),
            max_violation: Some(self.max_violation),
        }
    }
}

fn sample_vec(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-half_width..=half_width))
}

fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = x.norm();
        if norm > 1e-12 {
            return x / norm;
        }
    }
}

fn spectral(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.clone().svd(false, false).singular_values.max()
    }
}

/// Samples random pairs in `[−5, 5]^dim` and tests the descent inequalities
/// implied by `L_G`, `L_H`, `L_Ω` and `L⁰_Θ`.
pub fn check_descent_inequalities(
    spec: &ProblemSpec,
    sample_count: usize,
    seed: u64,
) -> ValidationReport {
    check_descent_inequalities_in_box(spec, sample_count, seed, SAMPLE_HALF_WIDTH)
}

pub fn check_descent_inequalities_in_box(
    spec: &ProblemSpec,
    sample_count: usize,
    seed: u64,
    half_width: f64,
) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (spec.n, spec.d);
    let l_omega = spec.l_omega();
    let mut g_joint = Tally::new("descent_G");
    let mut g_v = Tally::new("descent_G_v");
    let mut h = Tally::new("descent_H");
    let mut omega = Tally::new("descent_Omega");
    let mut theta_lip = Tally::new("lipschitz_Theta");
    let mut theta_jac = Tally::new("jacobian_norm_Theta");

    for _ in 0..sample_count {
        let u = sample_vec(&mut rng, n, half_width);
        let v = sample_vec(&mut rng, d, half_width);
        let u2 = sample_vec(&mut rng, n, half_width);
        let v2 = sample_vec(&mut rng, d, half_width);
        let p = unit_vec(&mut rng, spec.m);
        let du = &u - &u2;
        let dv = &v - &v2;

        let g = spec.coupling.value(&u, &v);
        let g2 = spec.coupling.value(&u2, &v2);
        let gu2 = spec.coupling.grad_u(&u2, &v2);
        let gv2 = spec.coupling.grad_v(&u2, &v2);
        let lin = gu2.dot(&du) + gv2.dot(&dv);
        g_joint.record(
            g - g2 - lin - 0.5 * spec.l_g * (du.norm_squared() + dv.norm_squared()),
            1.0 + g.abs() + g2.abs() + lin.abs(),
        );

        let g_uv2 = spec.coupling.value(&u, &v2);
        let gv_uv2 = spec.coupling.grad_v(&u, &v2);
        let lin = gv_uv2.dot(&dv);
        g_v.record(
            g - g_uv2 - lin - 0.5 * spec.l_g * dv.norm_squared(),
            1.0 + g.abs() + g_uv2.abs() + lin.abs(),
        );

        let hv = spec.smooth.value(&v);
        let hv2 = spec.smooth.value(&v2);
        let lin = spec.smooth.grad(&v2).dot(&dv);
        h.record(
            hv - hv2 - lin - 0.5 * spec.l_h * dv.norm_squared(),
            1.0 + hv.abs() + hv2.abs() + lin.abs(),
        );

        let om = spec.omega.value(&u);
        let om2 = spec.omega.value(&u2);
        let lin = spec.omega.jacobian(&u2) * &du;
        let inner = p.dot(&(&om - &om2 - &lin));
        omega.record(
            inner - 0.5 * l_omega * du.norm_squared(),
            1.0 + om.norm() + om2.norm() + lin.norm(),
        );

        let th = spec.theta(&u);
        let th2 = spec.theta(&u2);
        theta_lip.record(
            (&th - &th2).norm() - spec.l_theta * du.norm(),
            1.0 + th.norm() + th2.norm(),
        );
        theta_jac.record(
            spectral(&spec.theta_jacobian(&u)) - spec.l_theta,
            1.0 + spec.l_theta,
        );
    }

    let mut report = ValidationReport::default();
    for t in [g_joint, g_v, h, omega, theta_lip, theta_jac] {
        report.push_check(t.into_check());
    }
    report
}

fn fd_step(x: &DVector<f64>) -> f64 {
    1e-6 * (1.0 + x.norm())
}

fn central_diff<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>) -> DVector<f64> {
    let h = fd_step(x);
    DVector::from_fn(x.len(), |j, _| {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

fn central_diff_map<F: Fn(&DVector<f64>) -> DVector<f64>>(
    f: F,
    x: &DVector<f64>,
    rows: usize,
) -> DMatrix<f64> {
    let h = fd_step(x);
    let mut jac = DMatrix::zeros(rows, x.len());
    for j in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        jac.set_column(j, &((f(&plus) - f(&minus)) / (2.0 * h)));
    }
    jac
}

/// Relative tolerance of the finite-difference gradient check.
pub const FD_TOL: f64 = 1e-5;

/// Compares analytic gradients and Jacobians against central differences at
/// `points` random points of `[−5, 5]^dim`.
pub fn check_gradients(spec: &ProblemSpec, points: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 5];
    let mut fails = [0usize; 5];
    let names = [
        "gradient_u_G",
        "gradient_v_G",
        "gradient_H",
        "jacobian_Omega",
        "jacobian_Phi",
    ];
    let mut tally = |slot: usize, analytic_norm: f64, err: f64| {
        let rel = err / analytic_norm.max(1.0);
        worst[slot] = worst[slot].max(rel);
        if !(rel <= FD_TOL) {
            fails[slot] += 1;
        }
    };

    for _ in 0..points {
        let u = sample_vec(&mut rng, spec.n, SAMPLE_HALF_WIDTH);
        let v = sample_vec(&mut rng, spec.d, SAMPLE_HALF_WIDTH);

        let a = spec.coupling.grad_u(&u, &v);
        let fd = central_diff(|x| spec.coupling.value(x, &v), &u);
        tally(0, a.norm(), (&a - fd).norm());

        let a = spec.coupling.grad_v(&u, &v);
        let fd = central_diff(|x| spec.coupling.value(&u, x), &v);
        tally(1, a.norm(), (&a - fd).norm());

        let a = spec.smooth.grad(&v);
        let fd = central_diff(|x| spec.smooth.value(x), &v);
        tally(2, a.norm(), (&a - fd).norm());

        let a = spec.omega.jacobian(&u);
        let fd = central_diff_map(|x| spec.omega.value(x), &u, spec.m);
        tally(3, a.norm(), (&a - fd).norm());

        if spec.has_phi() {
            let a = spec.phi_jacobian(&u);
            let fd = central_diff_map(|x| spec.theta(x) - spec.omega.value(x), &u, spec.m);
            tally(4, a.norm(), (&a - fd).norm());
        }
    }

    let mut report = ValidationReport::default();
    let slots = if spec.has_phi() { 5 } else { 4 };
    for i in 0..slots {
        report.push_check(Check {
            name: names[i].to_string(),
            outcome: if fails[i] == 0 {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            detail: format!(
                "{} of {points} points exceed relative error {FD_TOL:e}",
                fails[i]
            ),
            max_violation: Some(worst[i]),
        });
    }
    report
}

/// Fails with a dimension error unless the kernel fits the block layout.
pub fn check_kernel(spec: &ProblemSpec, kernel: &BregmanKernel) -> Result<()> {
    kernel.validate()?;
    let sizes: Vec<usize> = spec.blocks.iter().map(|b| b.size).collect();
    kernel.check_blocks(&sizes)?;
    check_len("kernel weights", spec.n, kernel.weights(spec.n)?.len())
}
