//! Grid oracle for stationary points of tiny instances.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{image_preimage, solve_gram};
use crate::model::ProblemSpec;
use crate::prox::prox_separable;

/// Largest number of grid points accepted.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// `points` equally spaced values from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    /// Axis over `[lo, hi]` with spacing at most `step`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Self {
        let points = ((hi - lo) / step).ceil() as usize + 1;
        Self { lo, hi, points }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.points - 1) as f64
        }
    }
}

/// Grid over `u` and, optionally, `v`.
///
/// With empty `v_axes` the grid is restricted to the feasible set:
/// `v` is the preimage of `−Θ(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub u_axes: Vec<Axis>,
    pub v_axes: Vec<Axis>,
    /// Penalty used in the surrogate.
    pub gamma: f64,
    /// Candidates must have a surrogate at most this large.
    pub threshold: f64,
    /// Candidates closer than this (Euclidean, in `(u, v)`) are merged.
    pub merge_radius: f64,
}

impl GridSpec {
    fn axes(&self) -> Vec<Axis> {
        self.u_axes.iter().chain(&self.v_axes).copied().collect()
    }

    pub fn total_points(&self) -> Option<usize> {
        self.axes()
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
    }

    pub fn max_step(&self) -> f64 {
        self.axes().iter().map(Axis::step).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    /// Least-squares multiplier.
    pub p: DVector<f64>,
    pub surrogate: f64,
}

impl Candidate {
    pub fn distance(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        ((&self.u - u).norm_squared() + (&self.v - v).norm_squared()).sqrt()
    }
}

/// KKT residual surrogate at `(u, v)` and the multiplier it uses.
///
/// The multiplier `p = −B(BᵀB)⁻¹(∇_vG + ∇H)` is the least-squares solution of
/// the `v`-stationarity equation. The residual stacks the prox-gradient mapping
/// of `L_γ` in `u`, `∇_vL_γ`, and `Θ(u) + Bv`.
pub fn kkt_surrogate(
    spec: &ProblemSpec,
    gamma: f64,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let gram = spec.gram()?;
    let b = spec.b();
    let r = spec.constraint_residual(u, v);
    let g_v = spec.grad_v_sum(u, v);
    let p = -(b * solve_gram(gram, &g_v)?);
    let y = &p + &r * gamma;

    let g_u = spec.coupling.grad_u(u, v) + spec.theta_jacobian(u).tr_mul(&y);
    let mut res_u = 0.0;
    for (block, range) in spec.blocks.iter().zip(spec.block_ranges()) {
        let t = 0.5 * block.regularizer.max_step().min(1.0);
        for (local, j) in range.enumerate() {
            let z = prox_separable(
                &block.regularizer,
                t,
                u[j] - t * g_u[j],
                block.bounds.lower[local],
                block.bounds.upper[local],
            )?;
            let d = (u[j] - z) / t;
            res_u += d * d;
        }
    }
    let res_v = (g_v + b.tr_mul(&y)).norm_squared();
    Ok(((res_u + res_v + r.norm_squared()).sqrt(), p))
}

fn decode(mut index: usize, axes: &[Axis], out: &mut [usize]) {
    for (slot, axis) in out.iter_mut().zip(axes).rev() {
        *slot = index % axis.points;
        index /= axis.points;
    }
}

fn point(
    spec: &ProblemSpec,
    grid: &GridSpec,
    idx: &[usize],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let nu = grid.u_axes.len();
    let u = DVector::from_fn(nu, |j, _| grid.u_axes[j].value(idx[j]));
    let v = if grid.v_axes.is_empty() {
        image_preimage(spec.gram()?, spec.b(), &(-spec.theta(&u)))?.v
    } else {
        DVector::from_fn(grid.v_axes.len(), |j, _| grid.v_axes[j].value(idx[nu + j]))
    };
    Ok((u, v))
}

/// Local minima of the KKT surrogate over a grid that fall below the threshold.
///
/// A grid point is a local minimum when no neighbor in its `3^D` neighborhood
/// has a smaller surrogate. Candidates within `merge_radius` of a better one
/// (or adjacent on the grid) are dropped.
pub fn brute_force_stationary(spec: &ProblemSpec, grid: &GridSpec) -> Result<Vec<Candidate>> {
    if grid.u_axes.len() != spec.n {
        return Err(Error::Grid(format!(
            "{} u axes for n = {}",
            grid.u_axes.len(),
            spec.n
        )));
    }
    if !grid.v_axes.is_empty() && grid.v_axes.len() != spec.d {
        return Err(Error::Grid(format!(
            "{} v axes for d = {}",
            grid.v_axes.len(),
            spec.d
        )));
    }
    let axes = grid.axes();
    if axes.iter().any(|a| a.points == 0 || !(a.lo <= a.hi)) {
        return Err(Error::Grid("empty grid axis".into()));
    }
    let total = grid
        .total_points()
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::Grid(format!("grid exceeds {MAX_GRID_POINTS} points")))?;
    if !(grid.gamma > 0.0) {
        return Err(Error::Grid("gamma must be positive".into()));
    }
    let dim = axes.len();

    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0usize; dim],
            |idx, i| {
                decode(i, &axes, idx);
                let (u, v) = point(spec, grid, idx)?;
                Ok(kkt_surrogate(spec, grid.gamma, &u, &v)?.0)
            },
        )
        .collect::<Result<_>>()?;

    let offsets: Vec<Vec<isize>> = (0..3usize.pow(dim as u32))
        .map(|mut c| {
            (0..dim)
                .map(|_| {
                    let o = (c % 3) as isize - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<isize>| o.iter().any(|&x| x != 0))
        .collect();
    let strides: Vec<usize> = (0..dim)
        .map(|j| axes[j + 1..].iter().map(|a| a.points).product())
        .collect();

    let minima: Vec<usize> = (0..total)
        .into_par_iter()
        .filter(|&i| {
            let val = values[i];
            if !(val <= grid.threshold) {
                return false;
            }
            let mut idx = vec![0usize; dim];
            decode(i, &axes, &mut idx);
            offsets.iter().all(|off| {
                let mut flat = 0usize;
                for j in 0..dim {
                    let x = idx[j] as isize + off[j];
                    if x < 0 || x >= axes[j].points as isize {
                        return true;
                    }
                    flat += x as usize * strides[j];
                }
                values[flat] >= val
            })
        })
        .collect();

    let mut order = minima;
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut kept: Vec<(Vec<usize>, Candidate)> = Vec::new();
    let mut idx = vec![0usize; dim];
    for i in order {
        decode(i, &axes, &mut idx);
        let (u, v) = point(spec, grid, &idx)?;
        let adjacent = |other: &[usize]| other.iter().zip(&idx).all(|(&a, &b)| a.abs_diff(b) <= 1);
        if kept
            .iter()
            .any(|(oi, c)| adjacent(oi) || c.distance(&u, &v) <= grid.merge_radius)
        {
            continue;
        }
        let (surrogate, p) = kkt_surrogate(spec, grid.gamma, &u, &v)?;
        kept.push((idx.clone(), Candidate { u, v, p, surrogate }));
    }
    Ok(kept.into_iter().map(|(_, c)| c).collect())
}
