//! Seeded instance builders and a grid oracle for stationary points.

mod brute_force;
mod erm;
mod sharing;

pub use brute_force::{
    brute_force_stationary, kkt_surrogate, Axis, Candidate, GridSpec, MAX_GRID_POINTS,
};
pub use erm::{build_erm, ErmInstance, ErmParams, Loss};
pub use sharing::{build_sharing, SharingInstance, SharingParams};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `max_t |tanh''(t)| = 4/(3√3)`.
pub const TANH_CURVATURE: f64 = 0.769_800_358_919_501;

/// Lipschitz moduli recorded with a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConstants {
    pub l_g: f64,
    pub l_h: f64,
    pub l_theta: f64,
    /// One modulus per constraint component.
    pub l_omega: Vec<f64>,
}

/// Multiplicative overrides of recorded constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantScale {
    pub l_g: f64,
    pub l_h: f64,
    pub l_theta: f64,
    pub l_omega: f64,
}

impl Default for ConstantScale {
    fn default() -> Self {
        Self {
            l_g: 1.0,
            l_h: 1.0,
            l_theta: 1.0,
            l_omega: 1.0,
        }
    }
}

impl ConstantScale {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, c: &mut InstanceConstants) {
        c.l_g *= self.l_g;
        c.l_h *= self.l_h;
        c.l_theta *= self.l_theta;
        for x in &mut c.l_omega {
            *x *= self.l_omega;
        }
    }
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(
    what: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.clone().svd(false, false).singular_values.max()
    }
}

pub(crate) fn sech2(x: f64) -> f64 {
    let t = x.tanh();
    1.0 - t * t
}

pub(crate) fn check_box(lower: f64, upper: f64) -> Result<()> {
    if lower.is_nan()
        || upper.is_nan()
        || lower > upper
        || lower == f64::INFINITY
        || upper == f64::NEG_INFINITY
    {
        return Err(Error::InvalidParameter(format!(
            "empty box [{lower}, {upper}]"
        )));
    }
    Ok(())
}

/// Uniform draw in `[lower, upper] ∩ [−1, 1]`.
pub(crate) fn start_point(
    rng: &mut impl rand::Rng,
    n: usize,
    lower: f64,
    upper: f64,
) -> DVector<f64> {
    let lo = lower.max(-1.0);
    let hi = upper.min(1.0);
    DVector::from_fn(n, |_, _| {
        if lo < hi {
            rng.gen_range(lo..=hi)
        } else {
            lo.clamp(lower, upper)
        }
    })
}
