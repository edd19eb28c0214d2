use alloc::format;
use alloc::vec::Vec;
use libm::sqrt;
use rand::Rng;
use rand_distr::{Distribution as _, StudentT};

use super::{ConstraintSet, Dataset};
use crate::mechanisms::cone_measure_direction;
use crate::space::{dual_exponent, norm};
use crate::vector::{self, Vector};
use crate::{Error, Result};

use super::loss::sigmoid;

/// Synthetic data-generating distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum DataDistribution {
    /// `x = mu + spread * zeta / sqrt(d)` with i.i.d. Rademacher `zeta`, so
    /// `tr(Cov) = spread^2`. Unlabelled.
    MeanPoint { mu: Vector, spread: f64 },
    /// `x = radius * u` with `u` cone-distributed on the `lq` unit sphere and
    /// `P(y = 1 | x) = sigmoid(<w_star, x>)`, `y` in `{-1, 1}`.
    Logistic { w_star: Vector, radius: f64, q: f64 },
    /// `x` as for `Logistic`, `y = <w_star, x> + noise_scale * t` with `t`
    /// Student-t with `dof` degrees of freedom.
    HeavyTailed {
        w_star: Vector,
        radius: f64,
        q: f64,
        noise_scale: f64,
        dof: f64,
    },
}

impl DataDistribution {
    pub fn mean_point(mu: Vector, spread: f64) -> Result<Self> {
        vector::ensure_finite(&mu, "mean")?;
        if mu.is_empty() || !(spread >= 0.0 && spread.is_finite()) {
            return Err(Error::invalid("mean-point distribution needs d >= 1 and spread >= 0"));
        }
        Ok(DataDistribution::MeanPoint { mu, spread })
    }

    pub fn logistic(w_star: Vector, radius: f64, q: f64) -> Result<Self> {
        check_linear(&w_star, radius, q)?;
        Ok(DataDistribution::Logistic { w_star, radius, q })
    }

    pub fn heavy_tailed(w_star: Vector, radius: f64, q: f64, noise_scale: f64, dof: f64) -> Result<Self> {
        check_linear(&w_star, radius, q)?;
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::invalid(format!("noise scale must be >= 0, got {noise_scale}")));
        }
        if !(dof > 2.0) {
            return Err(Error::invalid(format!(
                "Student-t noise needs more than 2 degrees of freedom for a finite variance, got {dof}"
            )));
        }
        Ok(DataDistribution::HeavyTailed {
            w_star,
            radius,
            q,
            noise_scale,
            dof,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DataDistribution::MeanPoint { .. } => "mean_point",
            DataDistribution::Logistic { .. } => "logistic",
            DataDistribution::HeavyTailed { .. } => "heavy_tailed",
        }
    }

    pub fn d(&self) -> usize {
        match self {
            DataDistribution::MeanPoint { mu, .. } => mu.len(),
            DataDistribution::Logistic { w_star, .. } | DataDistribution::HeavyTailed { w_star, .. } => {
                w_star.len()
            }
        }
    }

    pub fn is_labelled(&self) -> bool {
        !matches!(self, DataDistribution::MeanPoint { .. })
    }

    /// `sup ||x||_b` over the support.
    pub fn feature_bound(&self, b: f64) -> f64 {
        let d = self.d() as f64;
        match self {
            DataDistribution::MeanPoint { mu, spread } => {
                // each coordinate moves by spread / sqrt(d)
                let step = spread / sqrt(d);
                norm(&mu.iter().map(|m| libm::fabs(*m) + step).collect::<Vec<_>>(), b)
            }
            DataDistribution::Logistic { radius, q, .. } | DataDistribution::HeavyTailed { radius, q, .. } => {
                radius * libm::pow(d, (1.0 / b - 1.0 / q).max(0.0))
            }
        }
    }

    /// Draws one record into `x` and returns its label (0 if unlabelled).
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> f64 {
        match self {
            DataDistribution::MeanPoint { mu, spread } => {
                let step = spread / sqrt(mu.len() as f64);
                for (xi, m) in x.iter_mut().zip(mu) {
                    *xi = if rng.random::<bool>() { m + step } else { m - step };
                }
                0.0
            }
            DataDistribution::Logistic { w_star, radius, q } => {
                fill_direction(x, *radius, *q, rng);
                let pr = sigmoid(vector::dot(w_star, x));
                if rng.random::<f64>() < pr {
                    1.0
                } else {
                    -1.0
                }
            }
            DataDistribution::HeavyTailed {
                w_star,
                radius,
                q,
                noise_scale,
                dof,
            } => {
                fill_direction(x, *radius, *q, rng);
                let t: f64 = StudentT::new(*dof).expect("dof > 2").sample(rng);
                vector::dot(w_star, x) + noise_scale * t
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::invalid("cannot sample an empty dataset"));
        }
        let d = self.d();
        let mut features = alloc::vec![0.0; n * d];
        let mut labels = Vec::with_capacity(n);
        for row in features.chunks_exact_mut(d) {
            labels.push(self.sample_row(rng, row));
        }
        Dataset::new(d, features, self.is_labelled().then_some(labels))
    }

    /// Minimiser of the population risk over `c`, when known in closed form.
    /// For the linear models this is `w_star` provided it lies in `c`.
    pub fn minimizer(&self, c: Option<&ConstraintSet>) -> Option<Vector> {
        match self {
            DataDistribution::MeanPoint { mu, .. } => match c {
                Some(c) => c.project(mu).ok(),
                None => Some(mu.clone()),
            },
            DataDistribution::Logistic { w_star, .. } | DataDistribution::HeavyTailed { w_star, .. } => {
                match c {
                    Some(c) if !c.contains(w_star, 0.0) => None,
                    _ => Some(w_star.clone()),
                }
            }
        }
    }

    /// Closed-form population risk of the mean-point loss,
    /// `0.5 ||w - mu||_2^2 + 0.5 tr(Cov)`.
    pub fn mean_point_risk(&self, w: &[f64]) -> Option<f64> {
        match self {
            DataDistribution::MeanPoint { mu, spread } => {
                let d = vector::l2_dist(w, mu);
                Some(0.5 * d * d + 0.5 * spread * spread)
            }
            _ => None,
        }
    }

    /// For pseudo-Huber regression: a bound on
    /// `E ||grad l(w, x) - grad L(w)||_q^2` valid for every `w` with
    /// `||w - w_star||_p <= diameter`. Uses `|psi'(r)| <= |r|`, so the bound is
    /// `R^2 (diameter^2 R^2 + noise_scale^2 dof / (dof - 2))`.
    pub fn gradient_variance_bound(&self, diameter: f64) -> Option<f64> {
        match self {
            DataDistribution::HeavyTailed {
                radius,
                noise_scale,
                dof,
                ..
            } => {
                let r2 = radius * radius;
                let noise_var = noise_scale * noise_scale * dof / (dof - 2.0);
                Some(r2 * (diameter * diameter * r2 + noise_var))
            }
            _ => None,
        }
    }

    /// Primal exponent whose dual is the feature norm, for linear models.
    pub fn primal_exponent(&self) -> Option<f64> {
        match self {
            DataDistribution::MeanPoint { .. } => None,
            DataDistribution::Logistic { q, .. } | DataDistribution::HeavyTailed { q, .. } => {
                Some(dual_exponent(*q))
            }
        }
    }
}

fn check_linear(w_star: &[f64], radius: f64, q: f64) -> Result<()> {
    vector::ensure_finite(w_star, "true parameter")?;
    if w_star.is_empty() {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("feature radius must be positive, got {radius}")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("feature norm index must be finite and >= 1, got {q}")));
    }
    Ok(())
}

fn fill_direction<R: Rng + ?Sized>(x: &mut [f64], radius: f64, q: f64, rng: &mut R) {
    let u = cone_measure_direction(x.len(), q, rng);
    for (xi, ui) in x.iter_mut().zip(u) {
        *xi = radius * ui;
    }
}
