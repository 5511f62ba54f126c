//! Closed-form proximal maps of the shipped separable penalties and the
//! exact solver for the linearized `u`-subproblem.
//!
//! Every penalty is piecewise quadratic in the scalar argument, so the
//! scalar subproblem
//!
//! ```text
//! min_{z ∈ [lo, hi]}  (1/2t)(z − x)² + P(z)
//! ```
//!
//! is solved by enumerating one candidate per piece: the stationary point of
//! the piece clipped to (piece ∩ box). Each restricted problem is strictly
//! convex under the step guards, so the clipped point is its minimizer and the
//! best candidate is a global minimizer.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bregman::BregmanKernel;
use crate::error::{check_len, Error, Result};
use crate::model::ProblemSpec;

/// Separable penalty applied coordinatewise within a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regularizer {
    Zero,
    L1 {
        lambda: f64,
    },
    /// Smoothly clipped absolute deviation, `a > 2`.
    Scad {
        lambda: f64,
        a: f64,
    },
    /// Minimax concave penalty, `θ > 0`.
    Mcp {
        lambda: f64,
        theta: f64,
    },
    /// `λ min(|z|, α)`.
    CappedL1 {
        lambda: f64,
        alpha: f64,
    },
}

/// `P(z) = c1 z + ½ c2 z² + const` on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    c1: f64,
    c2: f64,
}

const fn piece(lo: f64, hi: f64, c1: f64, c2: f64) -> Piece {
    Piece { lo, hi, c1, c2 }
}

const INF: f64 = f64::INFINITY;

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let lambda = match *self {
            Regularizer::Zero => return Ok(()),
            Regularizer::L1 { lambda } => lambda,
            Regularizer::Scad { lambda, a } => {
                if !(a > 2.0 && a.is_finite()) {
                    return bad(format!("SCAD requires a > 2, got {a}"));
                }
                lambda
            }
            Regularizer::Mcp { lambda, theta } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return bad(format!("MCP requires theta > 0, got {theta}"));
                }
                lambda
            }
            Regularizer::CappedL1 { lambda, alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("capped-l1 requires alpha > 0, got {alpha}"));
                }
                lambda
            }
        };
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            ));
        }
        Ok(())
    }

    pub fn penalty(&self, z: f64) -> f64 {
        let a_z = z.abs();
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * a_z,
            Regularizer::Scad { lambda, a } => {
                if a_z <= lambda {
                    lambda * a_z
                } else if a_z <= a * lambda {
                    (2.0 * a * lambda * a_z - z * z - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            Regularizer::Mcp { lambda, theta } => {
                if a_z <= theta * lambda {
                    lambda * a_z - z * z / (2.0 * theta)
                } else {
                    theta * lambda * lambda / 2.0
                }
            }
            Regularizer::CappedL1 { lambda, alpha } => lambda * a_z.min(alpha),
        }
    }

    /// `P′(z)` where `P` is differentiable; `None` at kinks.
    pub fn derivative(&self, z: f64) -> Option<f64> {
        let s = z.signum();
        let a_z = z.abs();
        match *self {
            Regularizer::Zero => Some(0.0),
            Regularizer::L1 { lambda } => (z != 0.0 || lambda == 0.0).then_some(lambda * s),
            Regularizer::Scad { lambda, a } => {
                if lambda == 0.0 {
                    Some(0.0)
                } else if z == 0.0 {
                    None
                } else if a_z <= lambda {
                    Some(lambda * s)
                } else if a_z <= a * lambda {
                    Some(s * (a * lambda - a_z) / (a - 1.0))
                } else {
                    Some(0.0)
                }
            }
            Regularizer::Mcp { lambda, theta } => {
                if lambda == 0.0 {
                    Some(0.0)
                } else if z == 0.0 {
                    None
                } else if a_z <= theta * lambda {
                    Some(s * (lambda - a_z / theta))
                } else {
                    Some(0.0)
                }
            }
            Regularizer::CappedL1 { lambda, alpha } => {
                if lambda == 0.0 {
                    Some(0.0)
                } else if z == 0.0 || a_z == alpha {
                    None
                } else if a_z < alpha {
                    Some(lambda * s)
                } else {
                    Some(0.0)
                }
            }
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match *self {
            Regularizer::Zero => vec![piece(-INF, INF, 0.0, 0.0)],
            Regularizer::L1 { lambda } => {
                vec![piece(-INF, 0.0, -lambda, 0.0), piece(0.0, INF, lambda, 0.0)]
            }
            Regularizer::Scad { lambda, a } => {
                let k = a * lambda / (a - 1.0);
                let c = -1.0 / (a - 1.0);
                let al = a * lambda;
                vec![
                    piece(-INF, -al, 0.0, 0.0),
                    piece(-al, -lambda, -k, c),
                    piece(-lambda, 0.0, -lambda, 0.0),
                    piece(0.0, lambda, lambda, 0.0),
                    piece(lambda, al, k, c),
                    piece(al, INF, 0.0, 0.0),
                ]
            }
            Regularizer::Mcp { lambda, theta } => {
                let c = -1.0 / theta;
                let tl = theta * lambda;
                vec![
                    piece(-INF, -tl, 0.0, 0.0),
                    piece(-tl, 0.0, -lambda, c),
                    piece(0.0, tl, lambda, c),
                    piece(tl, INF, 0.0, 0.0),
                ]
            }
            Regularizer::CappedL1 { lambda, alpha } => vec![
                piece(-INF, -alpha, 0.0, 0.0),
                piece(-alpha, 0.0, -lambda, 0.0),
                piece(0.0, alpha, lambda, 0.0),
                piece(alpha, INF, 0.0, 0.0),
            ],
        }
    }

    /// Largest step `t` for which every piece of the scalar subproblem stays
    /// strictly convex (`+∞` for convex penalties).
    pub fn max_step(&self) -> f64 {
        match *self {
            Regularizer::Scad { a, .. } => a - 1.0,
            Regularizer::Mcp { theta, .. } => theta,
            _ => INF,
        }
    }
}

/// Per-coordinate bounds; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![-INF; n],
            upper: vec![INF; n],
        }
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("box upper bounds", self.lower.len(), self.upper.len())?;
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == INF || hi == -INF {
                return Err(Error::InvalidParameter(format!(
                    "box coordinate {j} is empty: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.len()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| lo <= x && x <= hi)
    }

    pub fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(u.len(), |j, _| u[j].clamp(self.lower[j], self.upper[j]))
    }
}

/// Objective of the scalar subproblem.
pub fn prox_objective(kind: &Regularizer, t: f64, x: f64, z: f64) -> f64 {
    (z - x) * (z - x) / (2.0 * t) + kind.penalty(z)
}

/// Global minimizer of `z ↦ (1/2t)(z − x)² + P(z)` over `[lo, hi]`.
///
/// Among minimizers the one with the smallest `|z|` wins, then the smaller `z`.
pub fn prox_separable(kind: &Regularizer, t: f64, x: f64, lo: f64, hi: f64) -> Result<f64> {
    kind.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "prox step must be positive, got {t}"
        )));
    }
    if t >= kind.max_step() {
        return Err(Error::InvalidParameter(format!(
            "prox step {t} violates the guard t < {} for {kind:?}",
            kind.max_step()
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "prox point must be finite, got {x}"
        )));
    }
    if lo.is_nan() || hi.is_nan() || lo > hi || lo == INF || hi == -INF {
        return Err(Error::InvalidParameter(format!("empty box [{lo}, {hi}]")));
    }

    let mut best: Option<(f64, f64)> = None;
    for pc in kind.pieces() {
        let a = pc.lo.max(lo);
        let b = pc.hi.min(hi);
        if a > b {
            continue;
        }
        let stationary = (x - t * pc.c1) / (1.0 + t * pc.c2);
        let z = stationary.clamp(a, b);
        let f = prox_objective(kind, t, x, z);
        best = Some(match best {
            None => (z, f),
            Some((bz, bf)) => {
                let tol = 4.0 * f64::EPSILON * (f.abs() + bf.abs());
                if f < bf - tol || (f <= bf + tol && prefer(z, bz)) {
                    (z, f)
                } else {
                    (bz, bf)
                }
            }
        });
    }
    Ok(best
        .expect("at least one piece intersects a nonempty box")
        .0)
}

/// Tie rule: smaller `|z|`, then smaller `z`.
fn prefer(z: f64, incumbent: f64) -> bool {
    z.abs() < incumbent.abs() || (z.abs() == incumbent.abs() && z < incumbent)
}

/// Data handed to a block solver for one `u`-block subproblem
///
/// ```text
/// min_{u_i ∈ U_i} ⟨grad, u_i⟩ + J_i(u_i) + ⟨q, Φ_i(u_i)⟩ + (1/ε) D_i(u_i, u_k)
/// ```
pub struct BlockContext<'a> {
    pub block: usize,
    pub range: Range<usize>,
    pub u_k: &'a [f64],
    /// Block slice of `∇_uG(u^k, v^k) + ∇Ω(u^k)ᵀ q^k`.
    pub grad: &'a [f64],
    pub q: &'a DVector<f64>,
    pub eps: f64,
    /// Kernel weights of the block.
    pub weights: &'a [f64],
    pub regularizer: &'a Regularizer,
    pub bounds: &'a BoxSet,
}

/// Closed-form solution of one block subproblem when `Φ_i ≡ 0`.
pub fn closed_form_block(ctx: &BlockContext<'_>) -> Result<Vec<f64>> {
    ctx.u_k
        .iter()
        .zip(ctx.grad)
        .zip(ctx.weights)
        .enumerate()
        .map(|(j, ((&uj, &gj), &wj))| {
            let t = ctx.eps / wj;
            prox_separable(
                ctx.regularizer,
                t,
                uj - t * gj,
                ctx.bounds.lower[j],
                ctx.bounds.upper[j],
            )
        })
        .collect()
}

pub type BlockSolverFn = Arc<dyn Fn(&BlockContext<'_>) -> Vec<f64> + Send + Sync>;

/// User-supplied solvers replacing the closed form for selected blocks.
#[derive(Clone, Default)]
pub struct BlockSolverRegistry {
    solvers: BTreeMap<usize, BlockSolverFn>,
}

impl fmt::Debug for BlockSolverRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockSolverRegistry")
            .field("blocks", &self.solvers.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl BlockSolverRegistry {
    /// Registers `solver` for `block_id`, replacing (with a warning) any
    /// previous registration.
    pub fn register(&mut self, block_id: usize, solver: BlockSolverFn) {
        if self.solvers.insert(block_id, solver).is_some() {
            warn!("block solver for block {block_id} replaced");
        }
    }

    pub fn get(&self, block_id: usize) -> Option<&BlockSolverFn> {
        self.solvers.get(&block_id)
    }

    pub fn contains(&self, block_id: usize) -> bool {
        self.solvers.contains_key(&block_id)
    }

    pub fn is_empty(&self) -> bool {
        self.solvers.is_empty()
    }
}

/// Exact minimizer of the linearized `u`-subproblem with the closed-form path
/// for every block.
pub fn solve_u_subproblem(
    spec: &ProblemSpec,
    kernel: &BregmanKernel,
    u_k: &DVector<f64>,
    grad_lin: &DVector<f64>,
    eps_k: f64,
) -> Result<DVector<f64>> {
    let q = DVector::zeros(spec.m);
    solve_u_subproblem_with(
        spec,
        kernel,
        u_k,
        grad_lin,
        &q,
        eps_k,
        &BlockSolverRegistry::default(),
    )
}

/// Blockwise solve of the `u`-subproblem. Blocks run on the current rayon
/// pool and are gathered in block order.
pub fn solve_u_subproblem_with(
    spec: &ProblemSpec,
    kernel: &BregmanKernel,
    u_k: &DVector<f64>,
    grad_lin: &DVector<f64>,
    q: &DVector<f64>,
    eps_k: f64,
    registry: &BlockSolverRegistry,
) -> Result<DVector<f64>> {
    spec.check_u(u_k)?;
    check_len("grad_lin", spec.n, grad_lin.len())?;
    if !(eps_k > 0.0 && eps_k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps_k}"
        )));
    }
    let weights = kernel.weights(spec.n)?;
    let ranges = spec.block_ranges();

    let parts: Vec<Result<Vec<f64>>> = ranges
        .par_iter()
        .enumerate()
        .map(|(i, range)| {
            let block = &spec.blocks[i];
            let ctx = BlockContext {
                block: i,
                range: range.clone(),
                u_k: &u_k.as_slice()[range.clone()],
                grad: &grad_lin.as_slice()[range.clone()],
                q,
                eps: eps_k,
                weights: &weights.as_slice()[range.clone()],
                regularizer: &block.regularizer,
                bounds: &block.bounds,
            };
            if let Some(solver) = registry.get(i) {
                let out = solver(&ctx);
                check_len("block solver output", range.len(), out.len())?;
                Ok(out)
            } else if block.phi.is_some() {
                Err(Error::Configuration(format!(
                    "block {i} has a nonzero Phi_i but no block solver is registered"
                )))
            } else {
                closed_form_block(&ctx)
            }
        })
        .collect();

    let mut out = DVector::zeros(spec.n);
    for (range, part) in ranges.into_iter().zip(parts) {
        out.as_mut_slice()[range].copy_from_slice(&part?);
    }
    Ok(out)
}
