//! Nonconvex empirical risk minimization
//!
//! ```text
//! min J(u) + (1/m) Σ_j φ(tanh(a_jᵀu) − y_j)
//! ```
//!
//! reformulated with `v_j = tanh(a_jᵀu)`: `G = 0`, `H(v) = (1/m) Σ_j φ(v_j − y_j)`,
//! `Θ(u) = tanh(Au)`, `B = −I_m`, with the bounded loss `φ(t) = t²/(1 + t²)`.

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
use crate::model::{Block, ConstraintMap, ProblemSpec, SmoothTerm};
use crate::prox::{BoxSet, Regularizer};

/// Smooth bounded loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `φ(t) = t²/(1 + t²)`, `|φ''| ≤ 2`.
    #[default]
    GemanMcclure,
}

impl Loss {
    pub fn value(&self, t: f64) -> f64 {
        let t2 = t * t;
        t2 / (1.0 + t2)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = 1.0 + t * t;
        2.0 * t / (s * s)
    }

    /// `sup |φ''|`.
    pub fn curvature(&self) -> f64 {
        2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmParams {
    /// Predictor dimension.
    pub n: usize,
    /// Number of samples.
    pub m: usize,
    pub loss: Loss,
    pub regularizer: Regularizer,
    /// Features are drawn from `N(0, scale²/n)`.
    pub feature_scale: f64,
    /// Label noise standard deviation.
    pub noise: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
}

impl ErmParams {
    /// MCP(0.1, 2) penalty, unit feature scale, noise 0.1, `U = R^n`.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            loss: Loss::GemanMcclure,
            regularizer: Regularizer::Mcp {
                lambda: 0.1,
                theta: 2.0,
            },
            feature_scale: 1.0,
            noise: 0.1,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter(
                "ERM needs n >= 1 and m >= 1".into(),
            ));
        }
        for (name, x) in [("feature_scale", self.feature_scale), ("noise", self.noise)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {x}"
                )));
            }
        }
        self.regularizer.validate()?;
        check_box(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmInstance {
    pub params: ErmParams,
    /// Feature rows `a_jᵀ`, `m × n`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub initial_u: Vec<f64>,
    pub constants: InstanceConstants,
}

impl ErmInstance {
    pub fn generate(params: ErmParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let (n, m) = (params.n, params.m);
        let scale = params.feature_scale / (n as f64).sqrt();
        let a = DMatrix::from_fn(m, n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        let truth = DVector::from_fn(n, |j, _| match j % 4 {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        });
        let clean = (&a * &truth).map(f64::tanh);
        let labels = DVector::from_fn(m, |j, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            clean[j] + params.noise * z
        });
        let initial_u = start_point(&mut rng, n, params.lower, params.upper);

        let constants = InstanceConstants {
            l_g: 0.0,
            l_h: params.loss.curvature() / m as f64,
            l_theta: largest_singular_value(&a),
            l_omega: a
                .row_iter()
                .map(|row| TANH_CURVATURE * row.norm_squared())
                .collect(),
        };
        Ok(Self {
            params,
            features: to_rows(&a),
            labels: labels.iter().copied().collect(),
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
        let (n, m) = (p.n, p.m);
        let a = from_rows("features", &self.features, m, n)?;
        if self.labels.len() != m || self.initial_u.len() != n || self.constants.l_omega.len() != m
        {
            return Err(Error::InvalidParameter(
                "ERM instance data has wrong length".into(),
            ));
        }
        let mut k = self.constants.clone();
        scale.apply(&mut k);
        Ok(ProblemSpec::builder(n, -DMatrix::identity(m, m))
            .blocks(vec![Block::new(
                n,
                p.regularizer,
                BoxSet::uniform(n, p.lower, p.upper),
            )])
            .smooth(
                Arc::new(EmpiricalLoss {
                    loss: p.loss,
                    labels: DVector::from_column_slice(&self.labels),
                }),
                k.l_h,
            )
            .constraint(Arc::new(TanhFeatures { a }), k.l_omega, k.l_theta)
            .initial_u(DVector::from_column_slice(&self.initial_u))
            .build())
    }
}

/// Generates and builds an ERM instance.
pub fn build_erm(params: ErmParams) -> Result<ProblemSpec> {
    ErmInstance::generate(params)?.to_spec()
}

/// `H(v) = (1/m) Σ_j φ(v_j − y_j)`.
struct EmpiricalLoss {
    loss: Loss,
    labels: DVector<f64>,
}

impl SmoothTerm for EmpiricalLoss {
    fn value(&self, v: &DVector<f64>) -> f64 {
        let m = self.labels.len() as f64;
        v.iter()
            .zip(self.labels.iter())
            .map(|(x, y)| self.loss.value(x - y))
            .sum::<f64>()
            / m
    }

    fn grad(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = self.labels.len() as f64;
        v.zip_map(&self.labels, |x, y| self.loss.derivative(x - y) / m)
    }
}

/// `Θ(u) = tanh(Au)` componentwise.
struct TanhFeatures {
    a: DMatrix<f64>,
}

impl ConstraintMap for TanhFeatures {
    fn value(&self, u: &DVector<f64>) -> DVector<f64> {
        (&self.a * u).map(f64::tanh)
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let z = &self.a * u;
        let mut jac = self.a.clone();
        for (j, mut row) in jac.row_iter_mut().enumerate() {
            row *= sech2(z[j]);
        }
        jac
    }
}
