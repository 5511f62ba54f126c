use nalgebra::DVector;
use nappal::diagnostics::{CertificateRecord, PotentialConstants, RateEstimate};
use nappal::model::{Iterate, ProblemConstants};
use nappal::solver::{SolveResult, Termination};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRecord {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl From<&Iterate> for PointRecord {
    fn from(w: &Iterate) -> Self {
        let vec = |x: &DVector<f64>| x.iter().copied().collect();
        Self {
            u: vec(&w.u),
            v: vec(&w.v),
            p: vec(&w.p),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestRecord {
    /// `k̂`; the point is `w^{k̂+1}`.
    pub index: usize,
    pub step_norm: f64,
    pub point: PointRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunInfo {
    pub problem: String,
    pub seed: u64,
    pub termination: Termination,
    pub iterations: usize,
    pub trace_rows: usize,
    pub trace_stride: usize,
    pub gamma: f64,
    pub gamma_bound: f64,
    pub sigma: f64,
    pub workers: usize,
    pub sup_h: f64,
    pub min_tau: f64,
    pub breakdown: Option<String>,
}

/// Everything `summary.toml` holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub run: RunInfo,
    pub constants: ProblemConstants,
    pub potential: PotentialConstants,
    pub final_iterate: PointRecord,
    pub best_iterate: Option<BestRecord>,
    pub last_certificate: Option<CertificateRecord>,
    pub rate: Option<RateEstimate>,
}

impl Summary {
    pub fn new(run: RunInfo, res: &SolveResult) -> Self {
        Self {
            run,
            constants: res.constants,
            potential: res.potential,
            final_iterate: (&res.final_iterate).into(),
            best_iterate: res.best.as_ref().map(|b| BestRecord {
                index: b.index,
                step_norm: b.step_norm,
                point: (&b.point).into(),
            }),
            last_certificate: res.last_certificate,
            rate: res.rate.clone(),
        }
    }
}
