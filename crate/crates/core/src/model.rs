//! Problem abstraction for
//!
//! ```text
//! min  G(u, v) + J(u) + H(v)
//! s.t. Θ(u) + B v = 0,   Θ = Ω + Φ,   u ∈ U (box),  v ∈ R^d
//! ```
//!
//! together with the Lagrangian, the augmented Lagrangian and the structural
//! checks that can be performed on a black-box instance.

use std::fmt;
use std::ops::Range;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, GramFactorization};
use crate::prox::{BoxSet, Regularizer};

/// Smooth coupled term `G(u, v)`.
pub trait CouplingTerm: Send + Sync {
    fn value(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64;
    fn grad_u(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;
    fn grad_v(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;
}

/// Smooth term `H(v)`.
pub trait SmoothTerm: Send + Sync {
    fn value(&self, v: &DVector<f64>) -> f64;
    fn grad(&self, v: &DVector<f64>) -> DVector<f64>;
}

/// The linearized part `Ω : R^n -> R^m` of the constraint map.
pub trait ConstraintMap: Send + Sync {
    fn value(&self, u: &DVector<f64>) -> DVector<f64>;
    /// Jacobian `∇Ω(u)`, an `m × n` matrix.
    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64>;
}

/// Per-block non-linearized constraint contribution `Φ_i : R^{n_i} -> R^m`.
pub trait BlockConstraint: Send + Sync {
    fn value(&self, u_block: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, u_block: &DVector<f64>) -> DMatrix<f64>;
}

/// `G ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroCoupling {
    pub n: usize,
    pub d: usize,
}

impl CouplingTerm for ZeroCoupling {
    fn value(&self, _u: &DVector<f64>, _v: &DVector<f64>) -> f64 {
        0.0
    }
    fn grad_u(&self, _u: &DVector<f64>, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn grad_v(&self, _u: &DVector<f64>, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.d)
    }
}

/// `H ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroTerm {
    pub d: usize,
}

impl SmoothTerm for ZeroTerm {
    fn value(&self, _v: &DVector<f64>) -> f64 {
        0.0
    }
    fn grad(&self, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.d)
    }
}

/// `Ω(u) = M u + c`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let offset = DVector::zeros(matrix.nrows());
        Self { matrix, offset }
    }
}

impl ConstraintMap for AffineMap {
    fn value(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u + &self.offset
    }
    fn jacobian(&self, _u: &DVector<f64>) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

impl BlockConstraint for AffineMap {
    fn value(&self, u_block: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u_block + &self.offset
    }
    fn jacobian(&self, _u_block: &DVector<f64>) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

/// One block `u_i` of the primal variable.
#[derive(Clone)]
pub struct Block {
    pub size: usize,
    /// Applied to every coordinate of the block.
    pub regularizer: Regularizer,
    pub bounds: BoxSet,
    /// `Φ_i`; `None` means `Φ_i ≡ 0`.
    pub phi: Option<Arc<dyn BlockConstraint>>,
}

impl Block {
    pub fn new(size: usize, regularizer: Regularizer, bounds: BoxSet) -> Self {
        Self {
            size,
            regularizer,
            bounds,
            phi: None,
        }
    }

    pub fn unconstrained(size: usize, regularizer: Regularizer) -> Self {
        Self::new(size, regularizer, BoxSet::unbounded(size))
    }

    pub fn with_phi(mut self, phi: Arc<dyn BlockConstraint>) -> Self {
        self.phi = Some(phi);
        self
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Block")
            .field("size", &self.size)
            .field("regularizer", &self.regularizer)
            .field("bounds", &self.bounds)
            .field("phi", &self.phi.is_some())
            .finish()
    }
}

/// `‖B‖` and `λ_min(BᵀB)`, computed once per problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub b_norm: f64,
    pub lambda_min: f64,
    pub singular: bool,
}

/// Every modulus the step-size and certificate formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub l_g: f64,
    pub l_h: f64,
    /// `L_Ω = Σ_j L_{Ω_j}`.
    pub l_omega: f64,
    /// `L⁰_Θ`.
    pub l_theta: f64,
    pub b_norm: f64,
    pub lambda_min: f64,
}

impl ProblemConstants {
    /// The strict lower bound on `γ`: `(√57 + 1) / (2 λ_min(BᵀB)) · (L_G + L_H)`.
    pub fn gamma_bound(&self) -> f64 {
        (57f64.sqrt() + 1.0) / (2.0 * self.lambda_min) * (self.l_g + self.l_h)
    }
}

/// A fully specified instance.
pub struct ProblemSpec {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub blocks: Vec<Block>,
    pub coupling: Arc<dyn CouplingTerm>,
    pub l_g: f64,
    pub smooth: Arc<dyn SmoothTerm>,
    pub l_h: f64,
    pub omega: Arc<dyn ConstraintMap>,
    /// `L_{Ω_j}` for `j = 1..m`.
    pub l_omega_components: Vec<f64>,
    /// `L⁰_Θ`.
    pub l_theta: f64,
    /// Starting primal point `u⁰`.
    pub initial_u: DVector<f64>,
    b: DMatrix<f64>,
    spectral: OnceLock<SpectralConstants>,
    gram: OnceLock<std::result::Result<GramFactorization, Error>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("blocks", &self.blocks)
            .field("l_g", &self.l_g)
            .field("l_h", &self.l_h)
            .field("l_omega_components", &self.l_omega_components)
            .field("l_theta", &self.l_theta)
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Starts a problem with coupling matrix `B` (`m × d`) and `u`-dimension `n`.
    ///
    /// Every other term defaults to zero: `G = H = 0`, `Ω = 0`, one
    /// unregularized unconstrained block covering all of `u`, `u⁰ = 0`.
    pub fn builder(n: usize, b: DMatrix<f64>) -> ProblemBuilder {
        ProblemBuilder::new(n, b)
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn l_omega(&self) -> f64 {
        self.l_omega_components.iter().sum()
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = start..start + b.size;
                start += b.size;
                r
            })
            .collect()
    }

    pub fn has_phi(&self) -> bool {
        self.blocks.iter().any(|b| b.phi.is_some())
    }

    pub fn spectral(&self) -> SpectralConstants {
        *self.spectral.get_or_init(|| {
            let norm = linalg::spectral_norm(&self.b);
            let min = linalg::min_eigen_gram(&self.b);
            SpectralConstants {
                b_norm: norm.value,
                lambda_min: min.value,
                singular: min.singular,
            }
        })
    }

    /// Cholesky factorization of `BᵀB`, computed on first use.
    pub fn gram(&self) -> Result<&GramFactorization> {
        self.gram
            .get_or_init(|| GramFactorization::new(&self.b))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn constants(&self) -> ProblemConstants {
        let s = self.spectral();
        ProblemConstants {
            l_g: self.l_g,
            l_h: self.l_h,
            l_omega: self.l_omega(),
            l_theta: self.l_theta,
            b_norm: s.b_norm,
            lambda_min: s.lambda_min,
        }
    }

    pub fn check_u(&self, u: &DVector<f64>) -> Result<()> {
        check_len("u", self.n, u.len())
    }

    pub fn check_v(&self, v: &DVector<f64>) -> Result<()> {
        check_len("v", self.d, v.len())
    }

    pub fn check_p(&self, p: &DVector<f64>) -> Result<()> {
        check_len("p", self.m, p.len())
    }

    /// `Θ(u) = Ω(u) + Σ_i Φ_i(u_i)`.
    pub fn theta(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = self.omega.value(u);
        for (block, range) in self.blocks.iter().zip(self.block_ranges()) {
            if let Some(phi) = &block.phi {
                let ui = u.rows(range.start, range.len()).into_owned();
                out += phi.value(&ui);
            }
        }
        out
    }

    /// `∇Φ(u)` assembled blockwise (`m × n`); zero when no block carries `Φ_i`.
    pub fn phi_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.m, self.n);
        for (block, range) in self.blocks.iter().zip(self.block_ranges()) {
            if let Some(phi) = &block.phi {
                let ui = u.rows(range.start, range.len()).into_owned();
                jac.columns_mut(range.start, range.len())
                    .copy_from(&phi.jacobian(&ui));
            }
        }
        jac
    }

    /// `∇Θ(u) = ∇Ω(u) + ∇Φ(u)`.
    pub fn theta_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = self.omega.jacobian(u);
        if self.has_phi() {
            jac += self.phi_jacobian(u);
        }
        jac
    }

    /// `Θ(u) + Bv`.
    pub fn constraint_residual(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.theta(u) + &self.b * v
    }

    pub fn regularizer_value(&self, u: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .zip(self.block_ranges())
            .map(|(block, range)| {
                u.as_slice()[range]
                    .iter()
                    .map(|&x| block.regularizer.penalty(x))
                    .sum::<f64>()
            })
            .sum()
    }

    /// `F(u, v) = G(u, v) + J(u) + H(v)`.
    pub fn objective(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.coupling.value(u, v) + self.regularizer_value(u) + self.smooth.value(v)
    }

    /// `∇_vG(u, v) + ∇H(v)`.
    pub fn grad_v_sum(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.coupling.grad_v(u, v) + self.smooth.grad(v)
    }

    /// Per-coordinate box over the whole of `u`.
    pub fn feasible_box(&self) -> BoxSet {
        let mut lower = Vec::with_capacity(self.n);
        let mut upper = Vec::with_capacity(self.n);
        for block in &self.blocks {
            lower.extend_from_slice(&block.bounds.lower);
            upper.extend_from_slice(&block.bounds.upper);
        }
        BoxSet { lower, upper }
    }
}

/// Builder for [`ProblemSpec`].
pub struct ProblemBuilder {
    spec: ProblemSpec,
}

impl ProblemBuilder {
    fn new(n: usize, b: DMatrix<f64>) -> Self {
        let (m, d) = b.shape();
        let spec = ProblemSpec {
            n,
            d,
            m,
            blocks: vec![Block::unconstrained(n, Regularizer::Zero)],
            coupling: Arc::new(ZeroCoupling { n, d }),
            l_g: 0.0,
            smooth: Arc::new(ZeroTerm { d }),
            l_h: 0.0,
            omega: Arc::new(AffineMap::linear(DMatrix::zeros(m, n))),
            l_omega_components: vec![0.0; m],
            l_theta: 0.0,
            initial_u: DVector::zeros(n),
            b,
            spectral: OnceLock::new(),
            gram: OnceLock::new(),
        };
        Self { spec }
    }

    pub fn blocks(mut self, blocks: Vec<Block>) -> Self {
        self.spec.blocks = blocks;
        self
    }

    pub fn coupling(mut self, g: Arc<dyn CouplingTerm>, l_g: f64) -> Self {
        self.spec.coupling = g;
        self.spec.l_g = l_g;
        self
    }

    pub fn smooth(mut self, h: Arc<dyn SmoothTerm>, l_h: f64) -> Self {
        self.spec.smooth = h;
        self.spec.l_h = l_h;
        self
    }

    /// Sets `Ω` together with the component moduli `L_{Ω_j}` and `L⁰_Θ`.
    pub fn constraint(
        mut self,
        omega: Arc<dyn ConstraintMap>,
        l_omega_components: Vec<f64>,
        l_theta: f64,
    ) -> Self {
        self.spec.omega = omega;
        self.spec.l_omega_components = l_omega_components;
        self.spec.l_theta = l_theta;
        self
    }

    pub fn initial_u(mut self, u0: DVector<f64>) -> Self {
        self.spec.initial_u = u0;
        self
    }

    pub fn build(self) -> ProblemSpec {
        self.spec
    }
}

/// Primal-dual point `w = (u, v, p)` with the cached shifted multiplier `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub p: DVector<f64>,
    /// `q = p + γ(Θ(u) + Bv)`, present only while consistent with `(u, v, p)`.
    pub q: Option<DVector<f64>>,
}

impl Iterate {
    pub fn new(u: DVector<f64>, v: DVector<f64>, p: DVector<f64>) -> Self {
        Self { u, v, p, q: None }
    }

    pub fn check(&self, spec: &ProblemSpec) -> Result<()> {
        spec.check_u(&self.u)?;
        spec.check_v(&self.v)?;
        spec.check_p(&self.p)
    }

    /// `‖w − other‖` over the stacked `(u, v, p)`.
    pub fn distance(&self, other: &Iterate) -> f64 {
        let du = (&self.u - &other.u).norm_squared();
        let dv = (&self.v - &other.v).norm_squared();
        let dp = (&self.p - &other.p).norm_squared();
        (du + dv + dp).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(self.v.iter())
            .chain(self.p.iter())
            .all(|x| x.is_finite())
    }
}

/// `L(w) = F(u, v) + ⟨p, Θ(u) + Bv⟩`.
pub fn lagrangian(spec: &ProblemSpec, w: &Iterate) -> Result<f64> {
    w.check(spec)?;
    let r = spec.constraint_residual(&w.u, &w.v);
    Ok(spec.objective(&w.u, &w.v) + w.p.dot(&r))
}

/// `L_γ(w) = L(w) + (γ/2)‖Θ(u) + Bv‖²`.
pub fn augmented_lagrangian(spec: &ProblemSpec, w: &Iterate, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    w.check(spec)?;
    let r = spec.constraint_residual(&w.u, &w.v);
    Ok(spec.objective(&w.u, &w.v) + w.p.dot(&r) + 0.5 * gamma * r.norm_squared())
}

/// `‖Θ(u) + Bv‖`.
pub fn feasibility_residual(spec: &ProblemSpec, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    spec.check_u(u)?;
    spec.check_v(v)?;
    Ok(spec.constraint_residual(u, v).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Fail,
    /// Cannot be decided from black-box evaluators; taken on the user's word.
    Asserted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub outcome: CheckOutcome,
    pub detail: String,
    /// Largest observed violation, for sampling-based checks.
    pub max_violation: Option<f64>,
}

/// Pass/fail list produced by structural and sampling checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(
        &mut self,
        name: impl Into<String>,
        outcome: CheckOutcome,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            outcome,
            detail: detail.into(),
            max_violation: None,
        });
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn has_failures(&self) -> bool {
        self.checks.iter().any(|c| c.outcome == CheckOutcome::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.outcome {
                CheckOutcome::Pass => "PASS",
                CheckOutcome::Fail => "FAIL",
                CheckOutcome::Asserted => "USER-ASSERTED",
            };
            write!(f, "[{tag:>13}] {}: {}", c.name, c.detail)?;
            if let Some(v) = c.max_violation {
                write!(f, " (max violation {v:.3e})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Relative threshold below which `λ_min(BᵀB)` counts as rank deficiency.
pub const RANK_TOL: f64 = 1e-12;

/// Structural checks on an instance. Never fails; callers decide whether a
/// failed check rejects the instance.
pub fn validate_problem(spec: &ProblemSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut dims = Vec::new();
    let block_total: usize = spec.blocks.iter().map(|b| b.size).sum();
    if block_total != spec.n {
        dims.push(format!("block sizes sum to {block_total}, n = {}", spec.n));
    }
    if spec.b.nrows() != spec.m || spec.b.ncols() != spec.d {
        dims.push(format!(
            "B is {}x{}, expected {}x{}",
            spec.b.nrows(),
            spec.b.ncols(),
            spec.m,
            spec.d
        ));
    }
    if spec.l_omega_components.len() != spec.m {
        dims.push(format!(
            "{} Omega moduli for m = {}",
            spec.l_omega_components.len(),
            spec.m
        ));
    }
    if spec.initial_u.len() != spec.n {
        dims.push(format!("u0 has length {}", spec.initial_u.len()));
    }
    if dims.is_empty() {
        let u = &spec.initial_u;
        let v = DVector::zeros(spec.d);
        let omega = spec.omega.value(u);
        let jac = spec.omega.jacobian(u);
        if omega.len() != spec.m {
            dims.push(format!("Omega(u) has length {}", omega.len()));
        }
        if jac.shape() != (spec.m, spec.n) {
            dims.push(format!("Jacobian of Omega is {:?}", jac.shape()));
        }
        if spec.coupling.grad_u(u, &v).len() != spec.n
            || spec.coupling.grad_v(u, &v).len() != spec.d
        {
            dims.push("gradient of G has wrong length".into());
        }
        if spec.smooth.grad(&v).len() != spec.d {
            dims.push("gradient of H has wrong length".into());
        }
        for (i, (block, range)) in spec.blocks.iter().zip(spec.block_ranges()).enumerate() {
            if let Some(phi) = &block.phi {
                let ui = u.rows(range.start, range.len()).into_owned();
                if phi.value(&ui).len() != spec.m
                    || phi.jacobian(&ui).shape() != (spec.m, block.size)
                {
                    dims.push(format!("Phi_{i} has wrong shape"));
                }
            }
        }
    }
    if dims.is_empty() {
        report.push(
            "dimensions",
            CheckOutcome::Pass,
            format!(
                "n = {}, d = {}, m = {}, {} blocks",
                spec.n,
                spec.d,
                spec.m,
                spec.blocks.len()
            ),
        );
    } else {
        report.push("dimensions", CheckOutcome::Fail, dims.join("; "));
    }

    if spec.m >= spec.d {
        report.push(
            "tall_b",
            CheckOutcome::Pass,
            format!("m = {} >= d = {}", spec.m, spec.d),
        );
    } else {
        report.push(
            "tall_b",
            CheckOutcome::Fail,
            format!("m = {} < d = {}", spec.m, spec.d),
        );
    }

    let s = spec.spectral();
    let threshold = RANK_TOL * s.b_norm * s.b_norm;
    if !s.singular && s.lambda_min > threshold {
        report.push(
            "b_full_column_rank",
            CheckOutcome::Pass,
            format!(
                "lambda_min(B^T B) = {:.6e}, ||B|| = {:.6e}",
                s.lambda_min, s.b_norm
            ),
        );
    } else {
        report.push(
            "b_full_column_rank",
            CheckOutcome::Fail,
            format!(
                "lambda_min(B^T B) = {:.6e} <= {:.1e} ||B||^2",
                s.lambda_min, RANK_TOL
            ),
        );
    }

    let mut bad = Vec::new();
    let named = [
        ("L_G", spec.l_g),
        ("L_H", spec.l_h),
        ("L0_Theta", spec.l_theta),
    ];
    for (name, value) in named {
        if !(value.is_finite() && value >= 0.0) {
            bad.push(format!("{name} = {value}"));
        }
    }
    for (j, &value) in spec.l_omega_components.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            bad.push(format!("L_Omega[{j}] = {value}"));
        }
    }
    if bad.is_empty() {
        report.push(
            "constants",
            CheckOutcome::Pass,
            format!(
                "L_G = {}, L_H = {}, L_Omega = {}, L0_Theta = {}",
                spec.l_g,
                spec.l_h,
                spec.l_omega(),
                spec.l_theta
            ),
        );
    } else {
        report.push("constants", CheckOutcome::Fail, bad.join("; "));
    }

    let mut coverage = Vec::new();
    for (i, block) in spec.blocks.iter().enumerate() {
        if block.size == 0 {
            coverage.push(format!("block {i} is empty"));
        }
        if let Err(e) = block.regularizer.validate() {
            coverage.push(format!("block {i}: {e}"));
        }
        if block.bounds.len() != block.size {
            coverage.push(format!(
                "block {i}: box has {} coordinates for size {}",
                block.bounds.len(),
                block.size
            ));
        } else if let Err(e) = block.bounds.validate() {
            coverage.push(format!("block {i}: {e}"));
        }
    }
    if coverage.is_empty() {
        report.push(
            "block_coverage",
            CheckOutcome::Pass,
            "every block has one regularizer and one box",
        );
    } else {
        report.push("block_coverage", CheckOutcome::Fail, coverage.join("; "));
    }

    report.push(
        "image_inclusion",
        CheckOutcome::Asserted,
        "Im(Theta) within Im(B) is not machine-checkable; user asserted",
    );
    report.push(
        "lower_bounded_coercive",
        CheckOutcome::Asserted,
        "F lower bounded and coercive on the feasible set is not machine-checkable; user asserted",
    );
    report
}
