//! Experiment configuration: a single JSON document, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

/// A norm index given either as a number (`1.5`) or a name (`"l1"`, `"l2"`,
/// `"linf"`, `"inf"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormIndex {
    Value(f64),
    Name(String),
}

impl NormIndex {
    pub fn resolve(&self) -> HarnessResult<f64> {
        match self {
            NormIndex::Value(v) if *v >= 1.0 => Ok(*v),
            NormIndex::Value(v) => Err(HarnessError::config(format!("norm index must be >= 1, got {v}"))),
            NormIndex::Name(s) => match s.as_str() {
                "l1" => Ok(1.0),
                "l2" => Ok(2.0),
                "linf" | "inf" => Ok(f64::INFINITY),
                other => Err(HarnessError::config(format!("unknown norm name {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    Logistic {},
    MeanPoint {
        /// Override of `sup ||w - x||_2`; derived from the constraint set and
        /// the data support when absent.
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    PseudoHuber {
        h: f64,
    },
}

impl LossConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LossConfig::Logistic {} => "logistic",
            LossConfig::MeanPoint { .. } => "mean_point",
            LossConfig::PseudoHuber { .. } => "pseudo_huber",
        }
    }
}

/// The true parameter (or mean) either listed or as `scale * 1 / sqrt(d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamVector {
    Explicit(Vec<f64>),
    Scale(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    MeanPoint {
        mu: ParamVector,
        spread: f64,
    },
    Logistic {
        w_star: ParamVector,
        /// Bound on the feature norm.
        radius: f64,
        /// Feature norm index; defaults to the dual of the geometry's `p`.
        #[serde(default)]
        feature_norm: Option<NormIndex>,
    },
    HeavyTailed {
        w_star: ParamVector,
        radius: f64,
        #[serde(default)]
        feature_norm: Option<NormIndex>,
        noise_scale: f64,
        dof: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub p: NormIndex,
    pub d: usize,
    #[serde(default)]
    pub kappa_log_factor: Option<f64>,
    #[serde(default)]
    pub noise_log_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub norm: NormIndex,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalPolicy {
    /// Closed-form population risk (mean-point loss only).
    Oracle,
    /// Paired Monte Carlo estimate on `m_eval` fresh draws.
    Mc { m_eval: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Fixed(f64),
    /// `"theorem"`: the ceiling from the utility analysis.
    Policy(String),
}

/// Overrides for solver parameters and the constants hidden in their
/// schedules. Everything is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub t: Option<usize>,
    pub alpha_reg: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_trunc: Option<f64>,
    pub lambda_reg: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<AlphaSetting>,
    /// Monte Carlo samples for the Gaussian width used by `alpha = "theorem"`.
    pub width_samples: Option<usize>,
    pub t_scale: Option<f64>,
    pub lambda_scale: Option<f64>,
    pub batch_sigma2_scale: Option<f64>,
    pub c_shuf: Option<f64>,
    pub c_eps: Option<f64>,
    pub enforce_privacy_regime: Option<bool>,
    pub shuffle_data: Option<bool>,
    pub mirror_tol_scale: Option<f64>,
    pub mirror_max_iter: Option<usize>,
}

fn default_baseline_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: String,
    pub loss: LossConfig,
    pub distribution: DistributionConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub constraint: Option<ConstraintConfig>,
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub evaluation: EvalPolicy,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Worker threads; `None` uses the rayon default.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Record wall-clock time per run. Off by default so output is byte-stable.
    #[serde(default)]
    pub record_timing: bool,
    /// Sample size of the non-private baseline when no closed-form minimiser exists.
    #[serde(default = "default_baseline_samples")]
    pub baseline_samples: usize,
}

pub const ALGORITHMS: &[&str] = &[
    "app_objp",
    "app_objp_sc",
    "phased_dp_sgd",
    "noisy_reg_md",
    "shuffled_truncated_md",
    "batched_truncated_md",
    "lipschitz_high_p",
];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> HarnessResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !ALGORITHMS.contains(&self.algorithm.as_str()) {
            return bad(format!(
                "unknown algorithm {:?}; expected one of {}",
                self.algorithm,
                ALGORITHMS.join(", ")
            ));
        }
        if self.n_grid.is_empty() || self.eps_grid.is_empty() {
            return bad("n_grid and eps_grid must be nonempty".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid entries must be positive".into());
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_grid entries must be positive and finite".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.geometry.d == 0 {
            return bad("dimension must be positive".into());
        }
        if let EvalPolicy::Mc { m_eval } = self.evaluation {
            if m_eval < 2 {
                return bad("m_eval must be at least 2".into());
            }
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be at least 1".into());
        }
        if let Some(AlphaSetting::Policy(p)) = &self.schedule.alpha {
            if p != "theorem" {
                return bad(format!("alpha must be a number or \"theorem\", got {p:?}"));
            }
        }
        Ok(())
    }

    /// Replaces the base seed with `DPSCO_SEED` when that variable is set.
    pub fn apply_seed_env(&mut self) -> HarnessResult<()> {
        if let Ok(v) = std::env::var("DPSCO_SEED") {
            self.base_seed = v
                .trim()
                .parse()
                .map_err(|_| HarnessError::config(format!("DPSCO_SEED is not a u64: {v:?}")))?;
        }
        Ok(())
    }
}
