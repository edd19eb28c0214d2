//! Turns a validated [`ExperimentConfig`] into core objects and dispatches
//! the named solver.

use dpsco_core::euclidean::{
    app_objp, app_objp_sc, phased_dp_sgd, AlphaPolicy, ObjPConfig, PhasedSgdConfig,
};
use dpsco_core::lp::{
    batched_truncated_md, lipschitz_high_p, noisy_reg_md, shuffled_truncated_md, MdConfig,
};
use dpsco_core::mechanisms::PrivacyBudget;
use dpsco_core::problems::{gaussian_width_mc, ConstraintSet, DataDistribution, Dataset, LossModel};
use dpsco_core::space::dual_exponent;
use dpsco_core::{Result as CoreResult, SpaceSpec, Vector, Warning};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{
    AlphaSetting, DistributionConfig, ExperimentConfig, LossConfig, ParamVector,
};
use crate::error::{HarnessError, HarnessResult};

/// Default Monte Carlo size of the Gaussian-width estimate.
pub const DEFAULT_WIDTH_SAMPLES: usize = 10_000;

/// Everything a trial needs, built once per experiment.
#[derive(Debug, Clone)]
pub struct Components {
    pub p: f64,
    pub d: usize,
    /// Mirror-descent geometry, present for `1 < p < 2`.
    pub space: Option<SpaceSpec>,
    pub dist: DataDistribution,
    pub loss: LossModel,
    pub constraint: Option<ConstraintSet>,
    /// Gaussian width of the constraint set, when `alpha = "theorem"`.
    pub gaussian_width: Option<f64>,
}

/// What a solver returned, reduced to what the harness records.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub w: Vector,
    pub truncation_fraction: Option<f64>,
    pub warnings: Vec<Warning>,
}

fn param_vector(v: &ParamVector, d: usize, what: &str) -> HarnessResult<Vector> {
    match v {
        ParamVector::Explicit(x) if x.len() == d => Ok(x.clone()),
        ParamVector::Explicit(x) => Err(HarnessError::config(format!(
            "{what} has {} entries, geometry has d = {d}",
            x.len()
        ))),
        ParamVector::Scale(s) => Ok(vec![s / (d as f64).sqrt(); d]),
    }
}

fn needs_constraint(algorithm: &str) -> bool {
    matches!(
        algorithm,
        "app_objp" | "app_objp_sc" | "shuffled_truncated_md" | "batched_truncated_md"
    )
}

impl Components {
    pub fn build(cfg: &ExperimentConfig) -> HarnessResult<Self> {
        let p = cfg.geometry.p.resolve()?;
        if !(p > 1.0) {
            return Err(HarnessError::config(format!("geometry p must exceed 1, got {p}")));
        }
        let d = cfg.geometry.d;
        let q = dual_exponent(p);
        let space = if p < 2.0 {
            let kf = cfg.geometry.kappa_log_factor.unwrap_or(SpaceSpec::DEFAULT_KAPPA_LOG_FACTOR);
            let nf = cfg.geometry.noise_log_factor.unwrap_or(SpaceSpec::DEFAULT_NOISE_LOG_FACTOR);
            Some(SpaceSpec::with_log_factors(p, d, kf, nf)?)
        } else {
            None
        };

        let feature_q = |fnorm: &Option<crate::config::NormIndex>| -> HarnessResult<f64> {
            fnorm.as_ref().map(|f| f.resolve()).unwrap_or(Ok(q))
        };
        let dist = match &cfg.distribution {
            DistributionConfig::MeanPoint { mu, spread } => {
                DataDistribution::mean_point(param_vector(mu, d, "mu")?, *spread)?
            }
            DistributionConfig::Logistic {
                w_star,
                radius,
                feature_norm,
            } => DataDistribution::logistic(param_vector(w_star, d, "w_star")?, *radius, feature_q(feature_norm)?)?,
            DistributionConfig::HeavyTailed {
                w_star,
                radius,
                feature_norm,
                noise_scale,
                dof,
            } => DataDistribution::heavy_tailed(
                param_vector(w_star, d, "w_star")?,
                *radius,
                feature_q(feature_norm)?,
                *noise_scale,
                *dof,
            )?,
        };

        let constraint = match &cfg.constraint {
            Some(c) => Some(ConstraintSet::ball(c.norm.resolve()?, c.radius, d)?),
            None if needs_constraint(&cfg.algorithm) => {
                return Err(HarnessError::config(format!(
                    "{} needs a constraint set",
                    cfg.algorithm
                )))
            }
            None => None,
        };

        let loss = match (&cfg.loss, &dist) {
            (LossConfig::Logistic {}, DataDistribution::Logistic { .. }) => {
                LossModel::logistic(dist.feature_bound(q), p)?
            }
            (LossConfig::PseudoHuber { h }, DataDistribution::HeavyTailed { .. }) => {
                LossModel::pseudo_huber(*h, dist.feature_bound(q), p)?
            }
            (LossConfig::MeanPoint { lipschitz }, DataDistribution::MeanPoint { .. }) => {
                let l = match (lipschitz, &constraint) {
                    (Some(l), _) => *l,
                    (None, Some(c)) => 0.5 * c.diameter_l2() + dist.feature_bound(2.0),
                    (None, None) => {
                        return Err(HarnessError::config(
                            "mean_point loss without a constraint set needs an explicit lipschitz bound",
                        ))
                    }
                };
                LossModel::mean_point(l)?
            }
            (l, _) => {
                return Err(HarnessError::config(format!(
                    "loss {} does not fit distribution {}",
                    l.name(),
                    dist.name()
                )))
            }
        };

        match cfg.algorithm.as_str() {
            "noisy_reg_md" | "shuffled_truncated_md" | "batched_truncated_md" if space.is_none() => {
                return Err(HarnessError::config(format!(
                    "{} needs 1 < p < 2, got p = {p}",
                    cfg.algorithm
                )))
            }
            "app_objp" | "app_objp_sc" | "phased_dp_sgd" | "lipschitz_high_p" if p < 2.0 => {
                return Err(HarnessError::config(format!(
                    "{} needs p >= 2, got p = {p}",
                    cfg.algorithm
                )))
            }
            _ => {}
        }

        let gaussian_width = match (&cfg.schedule.alpha, &constraint) {
            (Some(AlphaSetting::Policy(_)), Some(c)) => {
                let m = cfg.schedule.width_samples.unwrap_or(DEFAULT_WIDTH_SAMPLES);
                // a fixed stream, independent of the trial seeds
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed ^ 0x5769_6474_6821);
                Some(gaussian_width_mc(c, m, &mut rng)?.0)
            }
            _ => None,
        };

        Ok(Components {
            p,
            d,
            space,
            dist,
            loss,
            constraint,
            gaussian_width,
        })
    }

    fn md_config(&self, cfg: &ExperimentConfig) -> MdConfig {
        let s = &cfg.schedule;
        let mut md = MdConfig::new(self.space.expect("checked in build"));
        md.t = s.t;
        md.alpha_reg = s.alpha_reg;
        md.gamma = s.gamma;
        md.lambda_trunc = s.lambda_trunc;
        if let Some(v) = s.t_scale {
            md.constants.t_scale = v;
        }
        if let Some(v) = s.lambda_scale {
            md.constants.lambda_scale = v;
        }
        if let Some(v) = s.batch_sigma2_scale {
            md.constants.batch_sigma2_scale = v;
        }
        if let Some(v) = s.c_shuf {
            md.constants.shuffle.c_shuf = v;
        }
        if let Some(v) = s.c_eps {
            md.constants.shuffle.c_eps = v;
        }
        if let Some(v) = s.enforce_privacy_regime {
            md.enforce_privacy_regime = v;
        }
        if let Some(v) = s.shuffle_data {
            md.shuffle_data = v;
        }
        if let Some(v) = s.mirror_tol_scale {
            md.mirror_tol_scale = v;
        }
        if let Some(v) = s.mirror_max_iter {
            md.mirror_max_iter = v;
        }
        md
    }

    fn alpha_policy(&self, cfg: &ExperimentConfig) -> HarnessResult<AlphaPolicy> {
        match &cfg.schedule.alpha {
            Some(AlphaSetting::Fixed(a)) => Ok(AlphaPolicy::Fixed(*a)),
            Some(AlphaSetting::Policy(_)) => Ok(AlphaPolicy::Theorem {
                gaussian_width: self.gaussian_width.expect("computed in build"),
            }),
            None => Err(HarnessError::config(format!(
                "{} needs schedule.alpha (a number or \"theorem\")",
                cfg.algorithm
            ))),
        }
    }

    /// Checks the parts of the configuration that are only looked at when a
    /// solver runs, so that mistakes surface before any work is done.
    pub fn preflight(&self, cfg: &ExperimentConfig) -> HarnessResult<()> {
        if cfg.algorithm.starts_with("app_objp") {
            self.alpha_policy(cfg)?;
        }
        Ok(())
    }

    /// Runs the configured solver on `data`.
    pub fn run_solver<R: Rng + ?Sized>(
        &self,
        cfg: &ExperimentConfig,
        data: &Dataset,
        epsilon: f64,
        rng: &mut R,
    ) -> CoreResult<SolverOutcome> {
        let budget = PrivacyBudget::new(epsilon, cfg.delta)?;
        let plain = |w: Vector, warnings: Vec<Warning>| SolverOutcome {
            w,
            truncation_fraction: None,
            warnings,
        };
        let c = self.constraint.as_ref();
        match cfg.algorithm.as_str() {
            "app_objp" | "app_objp_sc" => {
                let ocfg = ObjPConfig {
                    budget,
                    alpha: self.alpha_policy(cfg).map_err(|e| dpsco_core::Error::InvalidArgument(e.to_string()))?,
                    lambda_reg: cfg.schedule.lambda_reg,
                };
                let c = c.expect("checked in build");
                let out = if cfg.algorithm == "app_objp" {
                    app_objp(data, &self.loss, c, &ocfg, rng)?
                } else {
                    app_objp_sc(data, &self.loss, c, &ocfg, rng)?
                };
                Ok(plain(out.theta, out.warnings))
            }
            "phased_dp_sgd" | "lipschitz_high_p" => {
                let pcfg = PhasedSgdConfig {
                    budget,
                    eta: cfg.schedule.eta,
                };
                if cfg.algorithm == "phased_dp_sgd" {
                    let out = phased_dp_sgd(data, &self.loss, &pcfg, rng)?;
                    Ok(plain(out.w, out.warnings))
                } else {
                    let out = lipschitz_high_p(data, &self.loss, &pcfg, rng)?;
                    Ok(plain(out.inner.w, out.inner.warnings))
                }
            }
            "noisy_reg_md" => {
                let out = noisy_reg_md(data, &self.loss, &self.md_config(cfg), budget, rng)?;
                Ok(plain(out.w, out.warnings))
            }
            "shuffled_truncated_md" | "batched_truncated_md" => {
                let md = self.md_config(cfg);
                let c = c.expect("checked in build");
                let out = if cfg.algorithm == "shuffled_truncated_md" {
                    shuffled_truncated_md(data, &self.loss, c, &md, budget, rng)?
                } else {
                    batched_truncated_md(data, &self.loss, c, &md, budget, rng)?
                };
                Ok(SolverOutcome {
                    w: out.w,
                    truncation_fraction: Some(out.truncation.zeroed_fraction()),
                    warnings: out.warnings,
                })
            }
            other => unreachable!("algorithm {other} passed validation"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "algorithm": "batched_truncated_md",
            "loss": {"name": "pseudo_huber", "h": 5.0},
            "distribution": {"name": "heavy_tailed", "w_star": 0.3, "radius": 1.0, "noise_scale": 1.0, "dof": 3.0},
            "geometry": {"p": 1.5, "d": 4},
            "constraint": {"norm": 1.5, "radius": 1.0},
            "n_grid": [64], "eps_grid": [1.0], "delta": 1e-5, "trials": 1, "base_seed": 1,
            "evaluation": {"policy": "mc", "m_eval": 100}
        })
    }

    fn cfg(v: serde_json::Value) -> ExperimentConfig {
        ExperimentConfig::from_json(&v.to_string()).unwrap()
    }

    #[test]
    fn builds_and_runs_each_family() {
        let c = Components::build(&cfg(base())).unwrap();
        assert_eq!(c.loss.lipschitz(), 5.0 * c.dist.feature_bound(3.0));
        let data = c.dist.sample(64, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let out = c.run_solver(&cfg(base()), &data, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(out.truncation_fraction.is_some());

        let mut v = base();
        v["algorithm"] = "phased_dp_sgd".into();
        v["geometry"]["p"] = 2.into();
        v["constraint"] = serde_json::Value::Null;
        let k = cfg(v.clone());
        let c = Components::build(&k).unwrap();
        let out = c.run_solver(&k, &data, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.truncation_fraction, None);
    }

    #[test]
    fn mismatches_are_config_errors() {
        let mut v = base();
        v["loss"] = serde_json::json!({"name": "logistic"});
        assert!(Components::build(&cfg(v)).is_err());

        let mut v = base();
        v["geometry"]["p"] = 2.into();
        assert!(Components::build(&cfg(v)).is_err());

        let mut v = base();
        v["constraint"] = serde_json::Value::Null;
        assert!(Components::build(&cfg(v)).is_err());

        let mut v = base();
        v["distribution"]["w_star"] = serde_json::json!([0.1, 0.2]);
        assert!(Components::build(&cfg(v)).is_err());

        let mut v = base();
        v["algorithm"] = "app_objp".into();
        v["geometry"]["p"] = 2.into();
        v["constraint"]["norm"] = "l2".into();
        v["loss"] = serde_json::json!({"name": "pseudo_huber", "h": 1.0});
        let k = cfg(v);
        let c = Components::build(&k).unwrap();
        assert!(c.preflight(&k).is_err());
    }
}
