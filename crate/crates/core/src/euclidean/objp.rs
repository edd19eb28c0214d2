use alloc::format;
use alloc::vec::Vec;
use libm::{ceil, log, pow, sqrt};
use rand::Rng;

use super::inner::{inner_solve, SmoothObjective};
use crate::mechanisms::{gaussian_sample, objp_offset_sensitivity, PrivacyBudget};
use crate::problems::{empirical_grad_into, empirical_risk, ConstraintSet, Dataset, LossModel};
use crate::vector::{self, Vector};
use crate::{Error, Result, Warning};

/// How the optimisation accuracy `alpha` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    Fixed(f64),
    /// The ceiling from the utility analysis, which needs the Gaussian width
    /// of the constraint set (see `problems::gaussian_width_mc`).
    Theorem { gaussian_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjPConfig {
    pub budget: PrivacyBudget,
    pub alpha: AlphaPolicy,
    /// Ridge coefficient; `None` selects the automatic value.
    pub lambda_reg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjPOutput {
    pub theta: Vector,
    pub lambda_reg: f64,
    pub alpha: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Certified bound on `||theta_2 - theta_1||_2`.
    pub offset_bound: f64,
    pub inner_iterations: usize,
    pub warnings: Vec<Warning>,
}

/// `J(theta) = L_hat(theta) + <b, theta> + lambda ||theta||_2^2`.
pub struct PerturbedErm<'a> {
    pub data: &'a Dataset,
    pub loss: &'a LossModel,
    pub linear: Vector,
    pub lambda: f64,
    pub beta: f64,
    pub mu_loss: f64,
}

impl SmoothObjective for PerturbedErm<'_> {
    fn dim(&self) -> usize {
        self.data.d()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let r = empirical_risk(w, self.data, self.loss).unwrap_or(f64::NAN);
        r + vector::dot(&self.linear, w) + self.lambda * vector::dot(w, w)
    }

    fn gradient(&self, w: &[f64], out: &mut [f64]) {
        empirical_grad_into(w, self.data, self.loss, out);
        for ((o, b), wi) in out.iter_mut().zip(&self.linear).zip(w) {
            *o += b + 2.0 * self.lambda * wi;
        }
    }

    fn smoothness(&self) -> f64 {
        self.beta + 2.0 * self.lambda
    }

    fn strong_convexity(&self) -> f64 {
        2.0 * self.lambda + self.mu_loss
    }
}

/// Lipschitz and smoothness constants w.r.t. `||.||_2`. Constants stated for
/// `||.||_p` with `p >= 2` carry over unchanged.
pub(crate) fn euclidean_constants(loss: &LossModel) -> Result<(f64, f64)> {
    if loss.norm_p() >= 2.0 {
        Ok((loss.lipschitz(), loss.smoothness()))
    } else {
        Err(Error::UnsupportedGeometry(format!(
            "Euclidean solver needs loss constants for p >= 2, got p = {}",
            loss.norm_p()
        )))
    }
}

fn check_inputs(data: &Dataset, c: &ConstraintSet) -> Result<()> {
    if data.d() != c.d() {
        return Err(Error::DimensionMismatch {
            expected: c.d(),
            got: data.d(),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(alpha)
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_width(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("Gaussian width must be positive, got {g}")))
    }
}

fn sample_size_warning(data: &Dataset, budget: PrivacyBudget, warnings: &mut Vec<Warning>) {
    let required = sqrt(data.d() as f64 * log(1.0 / budget.delta())) / budget.epsilon();
    if (data.n() as f64) < required {
        warnings.push(Warning::SampleSizeBelowRecommended { required, n: data.n() });
    }
}

fn ceil_usize(x: f64) -> usize {
    if x >= usize::MAX as f64 {
        usize::MAX
    } else {
        ceil(x) as usize
    }
}

struct Release {
    lambda: f64,
    alpha: f64,
    sigma2: f64,
    mu_loss: f64,
}

fn release<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    budget: PrivacyBudget,
    plan: Release,
    warnings: Vec<Warning>,
    rng: &mut R,
) -> Result<ObjPOutput> {
    let (l, beta) = euclidean_constants(loss)?;
    let (eps, delta) = (budget.epsilon(), budget.delta());
    let n = data.n() as f64;
    let sigma1 = sqrt(128.0 * l * l * log(2.5 / delta) / (eps * eps));
    let g = gaussian_sample(data.d(), sigma1, rng);
    let objective = PerturbedErm {
        data,
        loss,
        linear: g.iter().map(|x| x / n).collect(),
        lambda: plan.lambda,
        beta,
        mu_loss: plan.mu_loss,
    };
    let sol = inner_solve(&objective, c, plan.alpha, &vector::zeros(data.d()))?;

    let mu = objective.strong_convexity();
    let offset_bound = sqrt(2.0 * plan.alpha / mu);
    // sensitivity used for sigma2 must dominate the distance certificate
    let reg = plan.lambda + plan.mu_loss / 2.0;
    if offset_bound > objp_offset_sensitivity(plan.alpha, reg) {
        return Err(Error::NoConvergence {
            what: "objective perturbation offset certificate",
            iterations: sol.iterations,
            residual: offset_bound,
        });
    }

    let sigma2 = sqrt(plan.sigma2);
    let h = gaussian_sample(data.d(), sigma2, rng);
    let theta = c.project(&vector::add(&sol.theta, &h))?;
    Ok(ObjPOutput {
        theta,
        lambda_reg: plan.lambda,
        alpha: plan.alpha,
        sigma1,
        sigma2,
        offset_bound,
        inner_iterations: sol.iterations,
        warnings,
    })
}

/// Approximate objective perturbation for convex losses.
///
/// Refuses with [`Error::PrivacyPrecondition`] unless `beta <= eps n lambda / r`
/// with `r = min{d, 2 rank}`.
pub fn app_objp<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &ObjPConfig,
    rng: &mut R,
) -> Result<ObjPOutput> {
    check_inputs(data, c)?;
    let (l, beta) = euclidean_constants(loss)?;
    let budget = cfg.budget;
    let (eps, delta) = (budget.epsilon(), budget.delta());
    let (n, d) = (data.n() as f64, data.d());
    let diam = c.diameter_l2();
    let r = d.min(2 * loss.hessian_rank(d)) as f64;

    let lambda = match cfg.lambda_reg {
        Some(lam) if lam > 0.0 && lam.is_finite() => lam,
        Some(lam) => return Err(Error::invalid(format!("lambda_reg must be positive, got {lam}"))),
        None => l / (sqrt(n) * diam),
    };
    if beta > eps * n * lambda / r {
        let min_n = match cfg.lambda_reg {
            Some(lam) => r * beta / (eps * lam),
            None => pow(r * beta * diam / (eps * l), 2.0),
        };
        return Err(Error::PrivacyPrecondition {
            reason: format!("smoothness {beta} exceeds eps n lambda / r = {}", eps * n * lambda / r),
            min_n: ceil_usize(min_n),
        });
    }
    let alpha = match cfg.alpha {
        AlphaPolicy::Fixed(a) => check_alpha(a)?,
        AlphaPolicy::Theorem { gaussian_width: gw } => {
            check_width(gw)?;
            let a1 = l * diam / pow(n, 1.5);
            let a2 = eps * eps * l * pow(diam, 3.0) / (gw * gw * log(1.0 / delta) * pow(n, 2.5));
            a1.min(a2).min(1.0)
        }
    };
    let mut warnings = Vec::new();
    sample_size_warning(data, budget, &mut warnings);
    let plan = Release {
        lambda,
        alpha,
        sigma2: 64.0 * alpha * log(2.5 / delta) / (lambda * eps * eps),
        mu_loss: 0.0,
    };
    release(data, loss, c, budget, plan, warnings, rng)
}

/// Approximate objective perturbation for losses that are strongly convex.
///
/// `Delta` is the modulus w.r.t. the gauge of `c`, obtained from the `l2`
/// modulus as `mu_2 * c_min^2`. The automatic ridge is
/// `max{r beta / (eps n) - Delta, 0}`.
pub fn app_objp_sc<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    c: &ConstraintSet,
    cfg: &ObjPConfig,
    rng: &mut R,
) -> Result<ObjPOutput> {
    check_inputs(data, c)?;
    let (l, beta) = euclidean_constants(loss)?;
    let mu2 = loss.strong_convexity();
    if !(mu2 > 0.0) {
        return Err(Error::invalid(format!("{} loss is not strongly convex", loss.name())));
    }
    let budget = cfg.budget;
    let (eps, delta) = (budget.epsilon(), budget.delta());
    let (n, d) = (data.n() as f64, data.d());
    let diam = c.diameter_l2();
    let cmin = c.c_min();
    let big_delta = mu2 * cmin * cmin;
    let r = d.min(2 * loss.hessian_rank(d)) as f64;

    let lambda = match cfg.lambda_reg {
        Some(lam) if lam >= 0.0 && lam.is_finite() => lam,
        Some(lam) => return Err(Error::invalid(format!("lambda_reg must be >= 0, got {lam}"))),
        None => (r * beta / (eps * n) - big_delta).max(0.0),
    };
    if beta > eps * n * (lambda + big_delta) / r {
        return Err(Error::PrivacyPrecondition {
            reason: format!(
                "smoothness {beta} exceeds eps n (lambda + Delta) / r = {}",
                eps * n * (lambda + big_delta) / r
            ),
            min_n: ceil_usize(r * beta / (eps * (lambda + big_delta))),
        });
    }
    let alpha = match cfg.alpha {
        AlphaPolicy::Fixed(a) => check_alpha(a)?,
        AlphaPolicy::Theorem { gaussian_width: gw } => {
            check_width(gw)?;
            let a1 = l * l * diam * diam / (big_delta * n * n);
            let a2 = pow(l, 4.0) * pow(diam, 6.0) * eps * eps
                / (pow(big_delta, 3.0) * pow(n, 4.0) * gw * gw * log(1.0 / delta));
            a1.min(a2).min(1.0)
        }
    };
    let mut warnings = Vec::new();
    sample_size_warning(data, budget, &mut warnings);
    let plan = Release {
        lambda,
        alpha,
        sigma2: 64.0 * alpha * log(2.5 / delta) * diam * diam / (big_delta * eps * eps),
        mu_loss: mu2,
    };
    release(data, loss, c, budget, plan, warnings, rng)
}
