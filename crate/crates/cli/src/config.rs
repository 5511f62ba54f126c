use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nappal::bregman::BregmanKernel;
use nappal::model::ProblemSpec;
use nappal::problems::{ConstantScale, ErmInstance, ErmParams, SharingInstance, SharingParams};
use nappal::solver::{default_gamma, EpsRule, SolverConfig, TraceRetention, DEFAULT_SAFETY};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub sharing: Option<SharingParams>,
    pub erm: Option<ErmParams>,
    #[serde(default)]
    pub constant_scale: ConstantScale,
}

/// `gamma = "auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GammaSetting {
    #[default]
    Auto,
    Value(f64),
}

impl<'de> Deserialize<'de> for GammaSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Self::Value(x)),
            Raw::Int(x) => Ok(Self::Value(x as f64)),
            Raw::Word(w) if w == "auto" => Ok(Self::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"auto\", got \"{w}\""
            ))),
        }
    }
}

impl Serialize for GammaSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Value(x) => s.serialize_f64(*x),
        }
    }
}

impl fmt::Display for GammaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: GammaSetting,
    pub safety: f64,
    pub sigma: f64,
    pub eps_rule: EpsRule,
    pub max_iters: usize,
    pub feas_tol: f64,
    pub cert_tol: f64,
    pub kernel: BregmanKernel,
    pub workers: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::new(1.0);
        Self {
            gamma: GammaSetting::Auto,
            safety: DEFAULT_SAFETY,
            sigma: base.sigma,
            eps_rule: base.eps_rule,
            max_iters: base.max_iters,
            feas_tol: base.feas_tol,
            cert_tol: base.cert_tol,
            kernel: base.kernel,
            workers: base.workers,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against the output directory.
    pub trace: PathBuf,
    pub summary: PathBuf,
    pub instance: PathBuf,
    pub trace_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trace: "trace.csv".into(),
            summary: "summary.toml".into(),
            instance: "instance.toml".into(),
            trace_stride: 1,
        }
    }
}

/// A generated instance, kept for serialization next to the run outputs.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Instance {
    Sharing(SharingInstance),
    Erm(ErmInstance),
}

impl Instance {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sharing(_) => "sharing",
            Self::Erm(_) => "erm",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Sharing(i) => i.params.seed,
            Self::Erm(i) => i.params.seed,
        }
    }

    pub fn to_spec(&self, scale: &ConstantScale) -> nappal::Result<ProblemSpec> {
        match self {
            Self::Sharing(i) => i.to_spec_scaled(scale),
            Self::Erm(i) => i.to_spec_scaled(scale),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<nappal::Error> for ConfigError {
    fn from(e: nappal::Error) -> Self {
        Self(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        match (&self.problem.sharing, &self.problem.erm) {
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "exactly one of [problem.sharing] or [problem.erm] must be given, found both"
                        .into(),
                ))
            }
            (None, None) => return Err(ConfigError(
                "exactly one of [problem.sharing] or [problem.erm] must be given, found neither"
                    .into(),
            )),
            _ => {}
        }
        let s = &self.solver;
        if !(s.safety >= 1.0 && s.safety.is_finite()) {
            return Err(ConfigError(format!(
                "solver.safety must be >= 1, got {}",
                s.safety
            )));
        }
        if let GammaSetting::Value(g) = s.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(ConfigError(format!(
                    "solver.gamma must be positive, got {g}"
                )));
            }
        }
        if self.output.trace_stride == 0 {
            return Err(ConfigError("output.trace_stride must be >= 1".into()));
        }
        let scale = &self.problem.constant_scale;
        for (name, x) in [
            ("l_g", scale.l_g),
            ("l_h", scale.l_h),
            ("l_theta", scale.l_theta),
            ("l_omega", scale.l_omega),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(ConfigError(format!(
                    "problem.constant_scale.{name} must be positive, got {x}"
                )));
            }
        }
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        if let Some(p) = &mut self.problem.sharing {
            p.seed = seed;
        }
        if let Some(p) = &mut self.problem.erm {
            p.seed = seed;
        }
    }

    pub fn instance(&self) -> Result<Instance, ConfigError> {
        Ok(match (&self.problem.sharing, &self.problem.erm) {
            (Some(p), _) => Instance::Sharing(SharingInstance::generate(p.clone())?),
            (_, Some(p)) => Instance::Erm(ErmInstance::generate(p.clone())?),
            (None, None) => unreachable!("checked on load"),
        })
    }

    /// Solver settings for `spec`; an explicit `gamma` at or below the bound is rejected.
    pub fn solver_config(&self, spec: &ProblemSpec) -> Result<SolverConfig, ConfigError> {
        let s = &self.solver;
        let bound = spec.constants().gamma_bound();
        let gamma = match s.gamma {
            GammaSetting::Auto => default_gamma(spec, s.safety)?,
            GammaSetting::Value(g) if g > bound => g,
            GammaSetting::Value(g) => {
                return Err(ConfigError(format!(
                    "solver.gamma = {g} does not exceed the lower bound {bound:.6} \
                     ((sqrt(57) + 1)(L_G + L_H) / (2 lambda_min(B^T B)))"
                )))
            }
        };
        let mut cfg = SolverConfig::new(gamma);
        cfg.sigma = s.sigma;
        cfg.eps_rule = s.eps_rule;
        cfg.max_iters = s.max_iters;
        cfg.feas_tol = s.feas_tol;
        cfg.cert_tol = s.cert_tol;
        cfg.kernel = s.kernel.clone();
        cfg.workers = s.workers;
        cfg.retention = match self.output.trace_stride {
            1 => TraceRetention::Full,
            k => TraceRetention::Stride(k),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
