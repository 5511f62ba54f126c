//! Quadratic Bregman kernels `K(u) = ½ Σ_j w_j u_j²` and their distances.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Blockwise-additive quadratic kernel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BregmanKernel {
    /// `K(u) = ½‖u‖²`.
    #[default]
    Euclidean,
    /// `K_i(u_i) = ½‖u_i‖²_{diag(w_i)}`, one weight vector per block.
    Diagonal { block_weights: Vec<Vec<f64>> },
}

impl BregmanKernel {
    pub fn diagonal(block_weights: Vec<Vec<f64>>) -> Result<Self> {
        let k = BregmanKernel::Diagonal { block_weights };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if let BregmanKernel::Diagonal { block_weights } = self {
            if block_weights.iter().all(|w| w.is_empty()) {
                return Err(Error::InvalidParameter(
                    "diagonal kernel without weights".into(),
                ));
            }
            if let Some(&w) = block_weights
                .iter()
                .flatten()
                .find(|&&w| !(w.is_finite() && w > 0.0))
            {
                return Err(Error::InvalidParameter(format!(
                    "kernel weights must be positive and finite, got {w}"
                )));
            }
        }
        Ok(())
    }

    /// Checks the weight layout against the block sizes of a problem.
    pub fn check_blocks(&self, block_sizes: &[usize]) -> Result<()> {
        if let BregmanKernel::Diagonal { block_weights } = self {
            check_len("kernel blocks", block_sizes.len(), block_weights.len())?;
            for (w, &size) in block_weights.iter().zip(block_sizes) {
                check_len("kernel block weights", size, w.len())?;
            }
        }
        Ok(())
    }

    /// Strong convexity modulus `β`.
    pub fn beta(&self) -> f64 {
        match self {
            BregmanKernel::Euclidean => 1.0,
            BregmanKernel::Diagonal { block_weights } => block_weights
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Gradient Lipschitz modulus `L_K`.
    pub fn l_k(&self) -> f64 {
        match self {
            BregmanKernel::Euclidean => 1.0,
            BregmanKernel::Diagonal { block_weights } => {
                block_weights.iter().flatten().copied().fold(0.0, f64::max)
            }
        }
    }

    /// Per-coordinate weights for a vector of length `n`.
    pub fn weights(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            BregmanKernel::Euclidean => Ok(DVector::from_element(n, 1.0)),
            BregmanKernel::Diagonal { block_weights } => {
                let flat: Vec<f64> = block_weights.iter().flatten().copied().collect();
                check_len("kernel weights", flat.len(), n)?;
                Ok(DVector::from_vec(flat))
            }
        }
    }

    pub fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.weights(u.len())?.component_mul(u))
    }

    /// `D(u, u′) = K(u) − K(u′) − ⟨∇K(u′), u − u′⟩ = ½ Σ_j w_j (u_j − u′_j)²`.
    pub fn distance(&self, u: &DVector<f64>, u_prev: &DVector<f64>) -> Result<f64> {
        check_len("bregman distance", u.len(), u_prev.len())?;
        let w = self.weights(u.len())?;
        Ok(0.5
            * u.iter()
                .zip(u_prev.iter())
                .zip(w.iter())
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>())
    }

    /// `D_i(u_i, u′_i)` for each block.
    pub fn block_distances(
        &self,
        block_sizes: &[usize],
        u: &DVector<f64>,
        u_prev: &DVector<f64>,
    ) -> Result<Vec<f64>> {
        check_len("bregman distance", u.len(), u_prev.len())?;
        let w = self.weights(u.len())?;
        let mut start = 0;
        let mut out = Vec::with_capacity(block_sizes.len());
        for &size in block_sizes {
            let mut acc = 0.0;
            for j in start..start + size {
                let diff = u[j] - u_prev[j];
                acc += w[j] * diff * diff;
            }
            out.push(0.5 * acc);
            start += size;
        }
        check_len("block sizes", u.len(), start)?;
        Ok(out)
    }
}
