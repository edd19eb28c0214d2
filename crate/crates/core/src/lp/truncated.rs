use alloc::vec::Vec;
use alloc::{format, vec};
use libm::{ceil, log, pow, sqrt};
use rand::seq::SliceRandom;
use rand::Rng;

use super::mirror::{mirror_step_constrained, truncate_gradient};
use super::{check_problem, MdConfig, MdOutput, TruncationStats};
use crate::mechanisms::{gg_sample, shuffle_calibrate, GgNoiseSpec, PrivacyBudget};
use crate::problems::{ConstraintSet, Dataset, LossModel};
use crate::space::norm;
use crate::vector::{self, Vector};
use crate::{Error, Result, Warning};

#[derive(Clone, Copy)]
enum Variant {
    Shuffled,
    Batched,
}

/// Resolved schedule of a truncated mirror-descent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSchedule {
    pub t: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// `||C||_p` diameter.
    pub m: f64,
    /// Truncation threshold `beta M + lambda`.
    pub threshold: f64,
}

fn d_log(d: usize, budget: PrivacyBudget) -> f64 {
    d as f64 * log(1.0 / budget.delta())
}

fn resolve(
    variant: Variant,
    n: usize,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &MdConfig,
    budget: PrivacyBudget,
    warnings: &mut Vec<Warning>,
) -> Result<TruncatedSchedule> {
    let spec = &cfg.space;
    let (nf, eps, kappa) = (n as f64, budget.epsilon(), spec.kappa());
    let dl = d_log(spec.d(), budget);
    let beta = loss.smoothness();
    let m = c.diameter_in(spec.p());
    let k = &cfg.constants;

    let lambda = match cfg.lambda_trunc {
        Some(l) if l > 0.0 && l.is_finite() => l,
        Some(l) => return Err(Error::invalid(format!("lambda_trunc must be positive, got {l}"))),
        None => {
            let raw = k.lambda_scale
                * match variant {
                    Variant::Shuffled => sqrt(nf * eps) / pow(kappa * kappa * dl, 0.25),
                    Variant::Batched => pow(sqrt(nf * eps) * m / (kappa * pow(dl, 0.25)), 2.0 / 3.0),
                };
            let floor = beta.max(1.0) * m;
            if raw < floor {
                warnings.push(Warning::ParameterClamped {
                    name: "lambda_trunc",
                    from: raw,
                    to: floor,
                });
                floor
            } else {
                raw
            }
        }
    };

    let requested = match cfg.t {
        Some(0) => return Err(Error::invalid("T must be at least 1")),
        Some(t) => t,
        None => {
            let raw = k.t_scale
                * match variant {
                    Variant::Shuffled => m * m * nf * nf * eps * eps / (lambda * lambda * dl),
                    Variant::Batched => nf * eps / (m * lambda * sqrt(dl)),
                };
            // saturate rather than wrap for astronomically large schedules
            if raw >= nf {
                n.saturating_add(1)
            } else {
                (ceil(raw) as usize).max(1)
            }
        }
    };
    let t = if requested > n {
        warnings.push(Warning::IterationsClamped { requested, used: n });
        n
    } else {
        requested
    };

    let gamma = match cfg.gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => return Err(Error::invalid(format!("gamma must be positive, got {g}"))),
        None => sqrt(t as f64),
    };
    Ok(TruncatedSchedule {
        t,
        lambda,
        gamma,
        m,
        threshold: beta * m + lambda,
    })
}

/// Half-open index ranges of `t` consecutive batches of `floor(n/t)`; the
/// remainder joins the last batch.
pub fn batch_bounds(n: usize, t: usize) -> Vec<(usize, usize)> {
    let base = n / t;
    (0..t)
        .map(|i| (i * base, if i + 1 == t { n } else { (i + 1) * base }))
        .collect()
}

/// Per-batch noise variance of the batched variant,
/// `c * kappa * threshold^2 * ln(1/delta) / (b^2 eps^2)` for batch size `b`.
pub fn batched_sigma2(kappa: f64, threshold: f64, batch: usize, budget: PrivacyBudget, scale: f64) -> f64 {
    let b = batch as f64;
    let eps = budget.epsilon();
    scale * kappa * threshold * threshold * log(1.0 / budget.delta()) / (b * b * eps * eps)
}

/// Shuffled truncated mirror descent over an `la` ball `C`, `1 < p < 2`.
///
/// Permutes the data, splits it into `T` batches, drops per-sample gradients
/// whose dual norm exceeds `beta M + lambda`, adds a Generalized Gaussian draw
/// to every remaining per-sample gradient at the shuffle-amplified scale, and
/// takes a constrained mirror step on the batch average. Returns the
/// `1/gamma`-weighted average of the iterates.
pub fn shuffled_truncated_md<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &MdConfig,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<MdOutput> {
    run(Variant::Shuffled, data, loss, c, cfg, budget, rng)
}

/// Batched truncated mirror descent: as [`shuffled_truncated_md`] but in data
/// order and with a single noise draw per batch. Privacy follows from
/// parallel composition over disjoint batches, so any `eps` is admissible.
pub fn batched_truncated_md<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &MdConfig,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<MdOutput> {
    run(Variant::Batched, data, loss, c, cfg, budget, rng)
}

fn run<R: Rng + ?Sized>(
    variant: Variant,
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &MdConfig,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<MdOutput> {
    let spec = &cfg.space;
    check_problem(data, loss, spec)?;
    if c.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: c.d(),
        });
    }
    let (n, d) = (data.n(), data.d());
    let mut warnings = Vec::new();
    let sched = resolve(variant, n, loss, c, cfg, budget, &mut warnings)?;
    let bounds = batch_bounds(n, sched.t);
    let smallest = bounds.iter().map(|(a, b)| b - a).min().unwrap_or(n);

    let (sigma2, order) = match variant {
        Variant::Shuffled => {
            let cal = shuffle_calibrate(n, budget, sched.threshold, spec.kappa(), cfg.constants.shuffle)?;
            if !cal.valid {
                if cfg.enforce_privacy_regime {
                    return Err(Error::PrivacyRegime {
                        epsilon: budget.epsilon(),
                        max_epsilon: cal.max_epsilon,
                    });
                }
                warnings.push(Warning::PrivacyCheckDisabled);
            }
            let mut order: Vec<usize> = (0..n).collect();
            if cfg.shuffle_data {
                order.shuffle(rng);
            }
            (cal.sigma * cal.sigma, order)
        }
        Variant::Batched => {
            let s2 = batched_sigma2(
                spec.kappa(),
                sched.threshold,
                smallest,
                budget,
                cfg.constants.batch_sigma2_scale,
            );
            (s2, (0..n).collect())
        }
    };
    let noise = GgNoiseSpec::new(sigma2, spec.r_noise(), d)?;
    let tol = cfg.mirror_tol_scale * sched.gamma * sched.m * sched.m;
    let q = spec.q();

    let mut stats = TruncationStats::default();
    let mut w: Vector = vector::zeros(d);
    let mut avg = vector::zeros(d);
    let mut weight_sum = 0.0;
    let mut max_residual: f64 = 0.0;
    let mut g = vec![0.0; d];
    for &(lo, hi) in &bounds {
        let mut g_hat = vector::zeros(d);
        for &i in &order[lo..hi] {
            g.iter_mut().for_each(|x| *x = 0.0);
            loss.add_gradient(&w, data.x(i), data.y(i), 1.0, &mut g);
            truncate_gradient(&mut g, q, sched.threshold, &mut stats);
            assert!(
                norm(&g, q) <= sched.threshold,
                "truncated gradient exceeds its threshold"
            );
            vector::axpy(1.0, &g, &mut g_hat);
            if let Variant::Shuffled = variant {
                vector::axpy(1.0, &gg_sample(&noise, rng), &mut g_hat);
            }
        }
        vector::scale(1.0 / (hi - lo) as f64, &mut g_hat);
        if let Variant::Batched = variant {
            vector::axpy(1.0, &gg_sample(&noise, rng), &mut g_hat);
        }
        let step = mirror_step_constrained(&g_hat, &w, sched.gamma, c, spec, tol, cfg.mirror_max_iter)?;
        assert!(step.residual <= tol, "mirror step accepted above tolerance");
        assert!(c.contains(&step.w, 1e-9), "mirror step left the constraint set");
        max_residual = max_residual.max(step.residual);
        w = step.w;
        let wt = 1.0 / sched.gamma;
        weight_sum += wt;
        let share = wt / weight_sum;
        avg.iter_mut().zip(&w).for_each(|(a, wi)| *a += share * (wi - *a));
    }

    Ok(MdOutput {
        w: avg,
        t: sched.t,
        gamma: sched.gamma,
        alpha_reg: 0.0,
        lambda_trunc: sched.lambda,
        sigma: sqrt(sigma2),
        truncation: stats,
        max_step_residual: max_residual,
        warnings,
    })
}

/// The schedule a truncated run would use, without running it.
pub fn truncated_schedule(
    shuffled: bool,
    n: usize,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &MdConfig,
    budget: PrivacyBudget,
) -> Result<(TruncatedSchedule, Vec<Warning>)> {
    let mut warnings = Vec::new();
    let v = if shuffled { Variant::Shuffled } else { Variant::Batched };
    let s = resolve(v, n, loss, c, cfg, budget, &mut warnings)?;
    Ok((s, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::DataDistribution;
    use crate::space::{grad_phi, inv_grad_phi, SpaceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, seed: u64) -> (SpaceSpec, Dataset, LossModel, ConstraintSet) {
        let spec = SpaceSpec::new(1.5, 6).unwrap();
        let mut ws = vec![0.0; 6];
        ws[0] = 0.4;
        ws[1] = -0.2;
        let dist = DataDistribution::heavy_tailed(ws, 1.0, spec.q(), 1.0, 3.0).unwrap();
        let data = dist.sample(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let loss = LossModel::pseudo_huber(5.0, 1.0, 1.5).unwrap();
        let c = ConstraintSet::lp_ball(1.5, 1.0, 6).unwrap();
        (spec, data, loss, c)
    }

    #[test]
    fn batches_cover_everything_once() {
        assert_eq!(batch_bounds(10, 3), vec![(0, 3), (3, 6), (6, 10)]);
        assert_eq!(batch_bounds(5, 5).len(), 5);
        assert_eq!(batch_bounds(7, 1), vec![(0, 7)]);
    }

    #[test]
    fn batch_noise_shrinks_linearly() {
        let b = PrivacyBudget::new(0.5, 1e-5).unwrap();
        let s1 = batched_sigma2(2.0, 3.0, 10, b, 1.0).sqrt();
        let s2 = batched_sigma2(2.0, 3.0, 20, b, 1.0).sqrt();
        assert!((s1 / s2 - 2.0).abs() < 1e-12);
    }

    /// One pass of batched mirror descent with no noise or truncation,
    /// written from the update rule alone.
    fn plain_md(data: &Dataset, order: &[usize], loss: &LossModel, c: &ConstraintSet, spec: &SpaceSpec, t: usize) -> Vector {
        let d = data.d();
        let gamma = (t as f64).sqrt();
        let mut w = vec![0.0; d];
        let mut sum = vec![0.0; d];
        for (lo, hi) in batch_bounds(data.n(), t) {
            let mut g = vec![0.0; d];
            for &i in &order[lo..hi] {
                loss.add_gradient(&w, data.x(i), data.y(i), 1.0 / (hi - lo) as f64, &mut g);
            }
            let mut y = grad_phi(&w, spec).unwrap();
            y.iter_mut().zip(&g).for_each(|(a, b)| *a -= b / gamma);
            let mut next = inv_grad_phi(&y, spec).unwrap();
            // C is the ls ball here, so the Bregman projection is radial
            let gauge = c.gauge(&next);
            if gauge > 1.0 {
                next.iter_mut().for_each(|x| *x /= gauge);
            }
            w = next;
            sum.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        }
        sum.iter().map(|x| x / t as f64).collect()
    }

    fn zero_noise_cfg(spec: SpaceSpec, t: usize) -> MdConfig {
        let mut cfg = MdConfig::new(spec);
        cfg.t = Some(t);
        cfg.lambda_trunc = Some(1e9);
        cfg.enforce_privacy_regime = false;
        cfg
    }

    #[test]
    fn zero_noise_matches_plain_mirror_descent() {
        let (spec, data, loss, c) = setup(200, 1);
        assert_eq!(c.norm_index(), spec.s());
        let b = PrivacyBudget::new(1e30, 1e-5).unwrap();
        let cfg = zero_noise_cfg(spec, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let out = shuffled_truncated_md(&data, &loss, &c, &cfg, b, &mut rng).unwrap();
        assert!(out.warnings.contains(&Warning::PrivacyCheckDisabled));
        assert_eq!(out.truncation.zeroed, 0);
        let mut order: Vec<usize> = (0..200).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(44));
        let reference = plain_md(&data, &order, &loss, &c, &spec, 8);
        assert!(vector::l2_dist(&out.w, &reference) < 1e-6);

        let batched = batched_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let identity: Vec<usize> = (0..200).collect();
        let reference = plain_md(&data, &identity, &loss, &c, &spec, 8);
        assert!(vector::l2_dist(&batched.w, &reference) < 1e-6);
    }

    #[test]
    fn single_batch_variants_coincide_without_shuffle() {
        let (spec, data, loss, c) = setup(64, 2);
        let b = PrivacyBudget::new(1e30, 1e-5).unwrap();
        let mut cfg = zero_noise_cfg(spec, 1);
        cfg.shuffle_data = false;
        let a = shuffled_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let z = batched_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(vector::l2_dist(&a.w, &z.w) < 1e-12);
    }

    #[test]
    fn iterates_stay_feasible_and_truncation_holds() {
        let (spec, data, loss, c) = setup(500, 3);
        let b = PrivacyBudget::new(1.0, 1e-5).unwrap();
        let mut cfg = MdConfig::new(spec);
        cfg.lambda_trunc = Some(1.0);
        cfg.t = Some(20);
        let out = batched_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert!(c.contains(&out.w, 1e-9));
        let threshold = loss.smoothness() * c.diameter_in(1.5) + 1.0;
        assert!(out.truncation.max_kept_norm <= threshold);
        assert_eq!(out.truncation.total, 500);
    }

    #[test]
    fn zeroed_count_nonincreasing_in_lambda() {
        let (spec, data, loss, c) = setup(400, 4);
        let b = PrivacyBudget::new(1.0, 1e-5).unwrap();
        let mut last = u64::MAX;
        for lambda in [1.0, 2.0, 4.0, 8.0] {
            let mut cfg = MdConfig::new(spec);
            cfg.lambda_trunc = Some(lambda);
            cfg.t = Some(10);
            let out = batched_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert!(out.truncation.zeroed <= last);
            last = out.truncation.zeroed;
        }
    }

    #[test]
    fn regime_gate() {
        let spec = SpaceSpec::new(1.5, 6).unwrap();
        let loss = LossModel::pseudo_huber(5.0, 1.0, 1.5).unwrap();
        let c = ConstraintSet::lp_ball(1.5, 1.0, 6).unwrap();
        let dist = DataDistribution::heavy_tailed(vec![0.1; 6], 1.0, spec.q(), 1.0, 3.0).unwrap();
        let data = dist.sample(1000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let cfg = MdConfig::new(spec);
        let b = PrivacyBudget::new(0.5, 1e-5).unwrap();
        let r = shuffled_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(0));
        match r {
            Err(Error::PrivacyRegime { epsilon, max_epsilon }) => {
                assert_eq!(epsilon, 0.5);
                assert!((max_epsilon - ((1000.0f64 / 1e-5).ln() / 1000.0).sqrt()).abs() < 1e-12);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(batched_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(0)).is_ok());
    }

    #[test]
    fn auto_schedule_respects_floor_and_clamp() {
        let (spec, _, loss, c) = setup(10, 0);
        let cfg = MdConfig::new(spec);
        let b = PrivacyBudget::new(1.0, 1e-5).unwrap();
        for shuffled in [true, false] {
            let (s, w) = truncated_schedule(shuffled, 1000, &loss, &c, &cfg, b).unwrap();
            assert!(s.lambda >= loss.smoothness().max(1.0) * s.m - 1e-12);
            assert!(s.t >= 1 && s.t <= 1000);
            assert_eq!(s.gamma, (s.t as f64).sqrt());
            let _ = w;
        }
        let mut cfg = cfg;
        cfg.t = Some(5000);
        let (s, w) = truncated_schedule(false, 1000, &loss, &c, &cfg, b).unwrap();
        assert_eq!(s.t, 1000);
        assert!(w.contains(&Warning::IterationsClamped { requested: 5000, used: 1000 }));
    }

    #[test]
    fn deterministic_per_seed() {
        let (spec, data, loss, c) = setup(300, 6);
        let b = PrivacyBudget::new(0.05, 1e-5).unwrap();
        let mut cfg = MdConfig::new(spec);
        cfg.enforce_privacy_regime = false;
        let a = shuffled_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let z = shuffled_truncated_md(&data, &loss, &c, &cfg, b, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, z);
    }
}
