//! Spectral quantities and the Gram factorization of the coupling matrix `B`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_len, Error, Result};

pub const MAX_POWER_ITERS: usize = 10_000;
pub const RAYLEIGH_TOL: f64 = 1e-12;
/// Default relative tolerance on the least-squares residual of [`image_preimage`].
pub const IMAGE_TOL: f64 = 1e-8;

/// Result of an iterative eigenvalue estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Set by [`min_eigen_gram`] when `BᵀB` could not be factorized.
    pub singular: bool,
}

/// Deterministic start vectors: all-ones, then alternating signs. The second
/// start catches Gram matrices whose extreme eigenvector is orthogonal to the
/// all-ones vector.
fn start_vectors(d: usize) -> [DVector<f64>; 2] {
    let ones = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let alt = DVector::from_fn(d, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 }).normalize();
    [ones, alt]
}

/// Iterates `x ← op(x)/‖op(x)‖` until the Rayleigh quotient `xᵀ gram x` settles.
fn rayleigh_iteration<F>(gram: &DMatrix<f64>, mut x: DVector<f64>, op: F) -> Estimate
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut rq = x.dot(&(gram * &x));
    for it in 1..=MAX_POWER_ITERS {
        let y = op(&x);
        let norm = y.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Estimate {
                value: 0.0,
                converged: norm == 0.0,
                iterations: it,
                singular: false,
            };
        }
        x = y / norm;
        let next = x.dot(&(gram * &x));
        if (next - rq).abs() <= RAYLEIGH_TOL * next.abs() {
            return Estimate {
                value: next,
                converged: true,
                iterations: it,
                singular: false,
            };
        }
        rq = next;
    }
    Estimate {
        value: rq,
        converged: false,
        iterations: MAX_POWER_ITERS,
        singular: false,
    }
}

/// Largest singular value of `B` by power iteration on `BᵀB`.
pub fn spectral_norm(b: &DMatrix<f64>) -> Estimate {
    let d = b.ncols();
    if d == 0 || b.nrows() == 0 {
        return Estimate {
            value: 0.0,
            converged: true,
            iterations: 0,
            singular: false,
        };
    }
    let gram = b.transpose() * b;
    let best = start_vectors(d)
        .into_iter()
        .map(|x0| rayleigh_iteration(&gram, x0, |x| &gram * x))
        .fold(None::<Estimate>, |acc, e| match acc {
            Some(a) if a.value >= e.value => Some(a),
            _ => Some(e),
        })
        .expect("two starts");
    Estimate {
        value: best.value.max(0.0).sqrt(),
        ..best
    }
}

/// `λ_min(BᵀB)` by inverse iteration through the Cholesky factor.
///
/// A Gram matrix that cannot be factorized yields `0` with `singular` set.
pub fn min_eigen_gram(b: &DMatrix<f64>) -> Estimate {
    let d = b.ncols();
    let singular = Estimate {
        value: 0.0,
        converged: true,
        iterations: 0,
        singular: true,
    };
    if d == 0 {
        return singular;
    }
    let gram = b.transpose() * b;
    let Some(chol) = gram.clone().cholesky() else {
        return singular;
    };
    let mut best: Option<Estimate> = None;
    for x0 in start_vectors(d) {
        let e = rayleigh_iteration(&gram, x0, |x| chol.solve(x));
        if best.is_none_or(|b| e.value < b.value) {
            best = Some(e);
        }
    }
    let best = best.expect("two starts");
    if best.value <= 0.0 || !best.value.is_finite() {
        return singular;
    }
    best
}

/// Cholesky factorization of `BᵀB` with the cached spectral constants.
#[derive(Debug, Clone)]
pub struct GramFactorization {
    chol: Cholesky<f64, Dyn>,
    gram: DMatrix<f64>,
    b_norm: f64,
    lambda_min: f64,
}

impl GramFactorization {
    pub fn new(b: &DMatrix<f64>) -> Result<Self> {
        let gram = b.transpose() * b;
        let min = min_eigen_gram(b);
        let norm = spectral_norm(b);
        if min.singular || min.value <= crate::model::RANK_TOL * norm.value * norm.value {
            return Err(Error::SingularGram {
                lambda_min: min.value,
            });
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or(Error::SingularGram { lambda_min: 0.0 })?;
        Ok(Self {
            chol,
            gram,
            b_norm: norm.value,
            lambda_min: min.value,
        })
    }

    /// Lower-triangular `L` with `L Lᵀ = BᵀB`.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }
}

/// Solves `(BᵀB) x = rhs` by two triangular solves.
pub fn solve_gram(f: &GramFactorization, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("gram rhs", f.dim(), rhs.len())?;
    Ok(f.chol.solve(rhs))
}

/// Least-squares preimage `argmin_v ‖Bv − target‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub v: DVector<f64>,
    pub residual: f64,
    /// `target` is not in `Im(B)` beyond the tolerance.
    pub breach: bool,
}

pub fn image_preimage(
    f: &GramFactorization,
    b: &DMatrix<f64>,
    target: &DVector<f64>,
) -> Result<Preimage> {
    image_preimage_with_tol(f, b, target, IMAGE_TOL)
}

pub fn image_preimage_with_tol(
    f: &GramFactorization,
    b: &DMatrix<f64>,
    target: &DVector<f64>,
    image_tol: f64,
) -> Result<Preimage> {
    check_len("preimage target", b.nrows(), target.len())?;
    let v = solve_gram(f, &(b.transpose() * target))?;
    let residual = (b * &v - target).norm();
    Ok(Preimage {
        breach: residual > image_tol * (1.0 + target.norm()),
        v,
        residual,
    })
}
