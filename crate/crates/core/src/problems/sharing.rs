//! Sharing problem
//!
//! ```text
//! min Σ_i J_i(u_i) + G̃(Σ_i Θ_i(u_i)),   u_i ∈ [lower, upper]^{n_i}
//! ```
//!
//! reformulated with `v = Σ_i Θ_i(u_i)`, i.e. `Θ(u) − v = 0` and `B = −I_m`.
//! Here `Θ_i(u_i) = A_i u_i + c·E_i tanh(u_i)` where `E_i` sends global
//! coordinate `j` to row `j mod m`, and
//! `G̃(v) = ½(v − b)ᵀQ(v − b) + ρ Σ_r cos(v_r)` with `Q` positive definite.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    check_box, from_rows, largest_singular_value, sech2, start_point, to_rows, ConstantScale,
    InstanceConstants, TANH_CURVATURE,
};
use crate::error::{Error, Result};
use crate::model::{Block, ConstraintMap, CouplingTerm, ProblemSpec};
use crate::prox::{BoxSet, Regularizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharingParams {
    /// `n_i` for each agent; the number of agents is the length.
    pub block_dims: Vec<usize>,
    /// Shared dimension.
    pub m: usize,
    /// Scale `c ≥ 0` of the tanh term.
    pub nonlinearity: f64,
    /// One penalty for every block, or a single one shared by all.
    pub regularizers: Vec<Regularizer>,
    pub lower: f64,
    pub upper: f64,
    /// `ρ ≥ 0`, amplitude of the cosine ripple in `G̃`.
    pub ripple: f64,
    /// `μ > 0`, the identity shift of `Q`.
    pub curvature: f64,
    pub seed: u64,
}

impl SharingParams {
    /// `agents` blocks of size `n_i`, MCP(0.1, 2), boxes `[−2, 2]`.
    pub fn new(agents: usize, n_i: usize, m: usize, nonlinearity: f64, seed: u64) -> Self {
        Self {
            block_dims: vec![n_i; agents],
            m,
            nonlinearity,
            regularizers: vec![Regularizer::Mcp {
                lambda: 0.1,
                theta: 2.0,
            }],
            lower: -2.0,
            upper: 2.0,
            ripple: 0.2,
            curvature: 0.5,
            seed,
        }
    }

    /// Linearly constrained convex QP: `c = 0`, `J = 0`, `ρ = 0`, no boxes,
    /// two blocks of size 2 and `m = 12`.
    pub fn convex_qp(seed: u64) -> Self {
        Self {
            block_dims: vec![2, 2],
            m: 12,
            nonlinearity: 0.0,
            regularizers: vec![Regularizer::Zero],
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            ripple: 0.0,
            curvature: 0.5,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.block_dims.is_empty() || self.block_dims.contains(&0) {
            return bad("sharing needs at least one agent and every block dimension >= 1".into());
        }
        if self.m == 0 {
            return bad("sharing dimension m must be >= 1".into());
        }
        if !(self.nonlinearity >= 0.0 && self.nonlinearity.is_finite()) {
            return bad(format!(
                "nonlinearity must be finite and >= 0, got {}",
                self.nonlinearity
            ));
        }
        if !(self.ripple >= 0.0 && self.ripple.is_finite()) {
            return bad(format!(
                "ripple must be finite and >= 0, got {}",
                self.ripple
            ));
        }
        if !(self.curvature > 0.0 && self.curvature.is_finite()) {
            return bad(format!(
                "curvature must be finite and > 0, got {}",
                self.curvature
            ));
        }
        let r = self.regularizers.len();
        if r != 1 && r != self.block_dims.len() {
            return bad(format!(
                "expected 1 or {} regularizers, got {r}",
                self.block_dims.len()
            ));
        }
        for reg in &self.regularizers {
            reg.validate()?;
        }
        check_box(self.lower, self.upper)
    }

    fn regularizer(&self, block: usize) -> Regularizer {
        if self.regularizers.len() == 1 {
            self.regularizers[0]
        } else {
            self.regularizers[block]
        }
    }
}

/// A generated sharing instance with all data needed to rebuild the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharingInstance {
    pub params: SharingParams,
    /// `[A_1 … A_N]`, `m × n`, by rows.
    pub a: Vec<Vec<f64>>,
    /// `Q`, `m × m`, by rows.
    pub q: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub initial_u: Vec<f64>,
    pub constants: InstanceConstants,
}

impl SharingInstance {
    pub fn generate(params: SharingParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let (n, m) = (params.n(), params.m);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let scale = 1.0 / (m as f64).sqrt();
        let a = DMatrix::from_fn(m, n, |_, _| normal() * scale);
        let w = DMatrix::from_fn(m, m, |_, _| normal());
        let target = DVector::from_fn(m, |_, _| normal());
        let mut q = &w * w.transpose() / m as f64;
        for i in 0..m {
            q[(i, i)] += params.curvature;
        }
        q = (&q + q.transpose()) * 0.5;
        let initial_u = start_point(&mut rng, n, params.lower, params.upper);

        let c = params.nonlinearity;
        let counts = row_counts(n, m);
        let max_count = counts.iter().copied().max().unwrap_or(0) as f64;
        let l_q = q.clone().symmetric_eigen().eigenvalues.max();
        let constants = InstanceConstants {
            l_g: l_q + params.ripple,
            l_h: 0.0,
            l_theta: largest_singular_value(&a) + c * max_count.sqrt(),
            l_omega: counts
                .iter()
                .map(|&k| if k > 0 { c * TANH_CURVATURE } else { 0.0 })
                .collect(),
        };
        Ok(Self {
            params,
            a: to_rows(&a),
            q: to_rows(&q),
            target: target.iter().copied().collect(),
            initial_u: initial_u.iter().copied().collect(),
            constants,
        })
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        self.to_spec_scaled(&ConstantScale::default())
    }

    pub fn to_spec_scaled(&self, scale: &ConstantScale) -> Result<ProblemSpec> {
        let p = &self.params;
        p.validate()?;
        let (n, m) = (p.n(), p.m);
        let a = from_rows("A", &self.a, m, n)?;
        let q = from_rows("Q", &self.q, m, m)?;
        if self.target.len() != m || self.initial_u.len() != n || self.constants.l_omega.len() != m
        {
            return Err(Error::InvalidParameter(
                "sharing instance data has wrong length".into(),
            ));
        }
        let mut k = self.constants.clone();
        scale.apply(&mut k);

        let blocks = p
            .block_dims
            .iter()
            .enumerate()
            .map(|(i, &size)| {
                Block::new(
                    size,
                    p.regularizer(i),
                    BoxSet::uniform(size, p.lower, p.upper),
                )
            })
            .collect();
        let coupling = SharingObjective {
            n,
            q,
            target: DVector::from_column_slice(&self.target),
            ripple: p.ripple,
        };
        let omega = TanhLift {
            a,
            c: p.nonlinearity,
            rows: (0..n).map(|j| j % m).collect(),
        };
        Ok(ProblemSpec::builder(n, -DMatrix::identity(m, m))
            .blocks(blocks)
            .coupling(Arc::new(coupling), k.l_g)
            .constraint(Arc::new(omega), k.l_omega, k.l_theta)
            .initial_u(DVector::from_column_slice(&self.initial_u))
            .build())
    }
}

/// Generates and builds a sharing instance.
pub fn build_sharing(params: SharingParams) -> Result<ProblemSpec> {
    SharingInstance::generate(params)?.to_spec()
}

fn row_counts(n: usize, m: usize) -> Vec<usize> {
    let mut counts = vec![0; m];
    for j in 0..n {
        counts[j % m] += 1;
    }
    counts
}

/// `G(u, v) = ½(v − b)ᵀQ(v − b) + ρ Σ cos(v_r)`.
struct SharingObjective {
    n: usize,
    q: DMatrix<f64>,
    target: DVector<f64>,
    ripple: f64,
}

impl CouplingTerm for SharingObjective {
    fn value(&self, _u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let d = v - &self.target;
        0.5 * d.dot(&(&self.q * &d)) + self.ripple * v.iter().map(|x| x.cos()).sum::<f64>()
    }

    fn grad_u(&self, _u: &DVector<f64>, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.n)
    }

    fn grad_v(&self, _u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.q * (v - &self.target) - v.map(|x| self.ripple * x.sin())
    }
}

/// `Ω(u) = A u + c Σ_j e_{row(j)} tanh(u_j)`.
struct TanhLift {
    a: DMatrix<f64>,
    c: f64,
    rows: Vec<usize>,
}

impl ConstraintMap for TanhLift {
    fn value(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.a * u;
        if self.c != 0.0 {
            for (j, &r) in self.rows.iter().enumerate() {
                out[r] += self.c * u[j].tanh();
            }
        }
        out
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = self.a.clone();
        if self.c != 0.0 {
            for (j, &r) in self.rows.iter().enumerate() {
                jac[(r, j)] += self.c * sech2(u[j]);
            }
        }
        jac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_problem;

    #[test]
    fn same_seed_same_instance() {
        let a = SharingInstance::generate(SharingParams::new(4, 3, 5, 0.5, 7)).unwrap();
        let b = SharingInstance::generate(SharingParams::new(4, 3, 5, 0.5, 7)).unwrap();
        assert_eq!(a, b);
        let c = SharingInstance::generate(SharingParams::new(4, 3, 5, 0.5, 8)).unwrap();
        assert_ne!(a.a, c.a);
    }

    #[test]
    fn b_constants_are_exact() {
        let spec = build_sharing(SharingParams::new(4, 3, 5, 0.5, 1)).unwrap();
        let s = spec.spectral();
        assert!((s.b_norm - 1.0).abs() < 1e-12);
        assert!((s.lambda_min - 1.0).abs() < 1e-12);
        assert!(!validate_problem(&spec).has_failures());
    }

    #[test]
    fn invalid_params() {
        let mut p = SharingParams::new(2, 1, 1, 0.5, 1);
        p.block_dims = vec![1, 0];
        assert!(SharingInstance::generate(p).is_err());
        let mut p = SharingParams::new(2, 1, 1, 0.5, 1);
        p.regularizers = vec![Regularizer::Zero; 3];
        assert!(SharingInstance::generate(p).is_err());
        let mut p = SharingParams::new(2, 1, 1, 0.5, 1);
        p.lower = 3.0;
        assert!(SharingInstance::generate(p).is_err());
    }

    #[test]
    fn scaling_halves_l_g() {
        let inst = SharingInstance::generate(SharingParams::new(2, 2, 3, 0.5, 1)).unwrap();
        let spec = inst
            .to_spec_scaled(&ConstantScale {
                l_g: 0.5,
                ..Default::default()
            })
            .unwrap();
        assert_eq!(spec.l_g, 0.5 * inst.constants.l_g);
    }
}
