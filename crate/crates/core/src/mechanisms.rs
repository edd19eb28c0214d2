//! Noise mechanisms and their calibration.
//!
//! The samplers draw from a caller-supplied generator and are statistical,
//! not cryptographic: they are adequate for experiments, not for deployment.

use alloc::format;
use libm::{log, pow, sqrt};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::space::norm;
use crate::vector::{self, Vector};
use crate::{Error, Result};

/// Target `(epsilon, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// A Generalized Gaussian law with density proportional to
/// `exp(-||z||_r^2 / (2 sigma2))` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgNoiseSpec {
    sigma2: f64,
    r: f64,
    d: usize,
}

impl GgNoiseSpec {
    /// `sigma2 = 0` is accepted and yields a point mass at the origin.
    pub fn new(sigma2: f64, r: f64, d: usize) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be finite and >= 0, got {sigma2}")));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::invalid(format!("norm index must be finite and >= 1, got {r}")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(GgNoiseSpec { sigma2, r, d })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn sigma(&self) -> f64 {
        sqrt(self.sigma2)
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn d(&self) -> usize {
        self.d
    }
}

fn check_sensitivity(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sensitivity must be finite and >= 0, got {s}")))
    }
}

/// Gaussian mechanism variance `2 Delta^2 ln(1.25/delta) / epsilon^2`.
pub fn gaussian_noise_sigma2(l2_sensitivity: f64, budget: PrivacyBudget) -> Result<f64> {
    check_sensitivity(l2_sensitivity)?;
    let e = budget.epsilon;
    Ok(2.0 * l2_sensitivity * l2_sensitivity * log(1.25 / budget.delta) / (e * e))
}

/// Generalized Gaussian variance parameter `2 kappa ln(1/delta) s^2 / epsilon^2`
/// for a release with sensitivity `s` in the dual norm.
pub fn gg_calibrate(sensitivity_star: f64, kappa: f64, budget: PrivacyBudget) -> Result<f64> {
    check_sensitivity(sensitivity_star)?;
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    let e = budget.epsilon;
    Ok(2.0 * kappa * log(1.0 / budget.delta) * sensitivity_star * sensitivity_star / (e * e))
}

/// Draws `N(0, sigma^2 I_d)`.
pub fn gaussian_sample<R: Rng + ?Sized>(d: usize, sigma: f64, rng: &mut R) -> Vector {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect()
}

/// Exact draw from the Generalized Gaussian law of `spec`.
///
/// A density that depends on `z` only through `t = ||z||_r` factors into an
/// independent radius with density proportional to `t^{d-1} exp(-t^2/(2 sigma^2))`,
/// i.e. `sigma * chi_d`, and a direction distributed by the cone measure of
/// the `lr` unit sphere. Both are sampled directly, so the normalising
/// constant never enters.
pub fn gg_sample<R: Rng + ?Sized>(spec: &GgNoiseSpec, rng: &mut R) -> Vector {
    if spec.sigma2 == 0.0 {
        return vector::zeros(spec.d);
    }
    let mut u = cone_measure_direction(spec.d, spec.r, rng);
    let chi2: f64 = ChiSquared::new(spec.d as f64)
        .expect("positive degrees of freedom")
        .sample(rng);
    vector::scale(spec.sigma() * sqrt(chi2), &mut u);
    u
}

/// A point on the `lr` unit sphere drawn from its cone measure
/// (Schechtman and Zinn): normalise i.i.d. coordinates with density
/// proportional to `exp(-|x|^r)`.
pub fn cone_measure_direction<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vector {
    // |x|^r ~ Gamma(1/r). The shape is below one, so draw Gamma(1/r + 1)
    // and multiply by U^r: (G1 U^r)^{1/r} = G1^{1/r} U.
    let gamma = Gamma::new(1.0 / r + 1.0, 1.0).expect("shape is positive");
    let mut u: Vector = (0..d)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let unif: f64 = 1.0 - rng.random::<f64>();
            let mag = pow(g, 1.0 / r) * unif;
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let m = norm(&u, r);
    if m == 0.0 {
        // probability zero
        u[0] = 1.0;
        return u;
    }
    vector::scale(1.0 / m, &mut u);
    u
}

/// Per-step budget `(epsilon', delta')` under advanced composition over `t`
/// steps: `epsilon' = epsilon / (2 sqrt(2 t ln(2/delta)))`, `delta' = delta / t`.
pub fn advanced_composition(target: PrivacyBudget, t: usize) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::invalid("composition needs at least one step"));
    }
    if target.epsilon >= 1.0 {
        return Err(Error::invalid(format!(
            "advanced composition is stated for epsilon < 1, got {}",
            target.epsilon
        )));
    }
    let tf = t as f64;
    let eps = target.epsilon / (2.0 * sqrt(2.0 * tf * log(2.0 / target.delta)));
    Ok((eps, target.delta / tf))
}

/// Constants for the shuffling calibration, whose source analysis only gives
/// orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuffleConstants {
    /// Multiplier of the noise scale.
    pub c_shuf: f64,
    /// Multiplier of the largest admissible epsilon.
    pub c_eps: f64,
}

impl Default for ShuffleConstants {
    fn default() -> Self {
        ShuffleConstants {
            c_shuf: 1.0,
            c_eps: 1.0,
        }
    }
}

/// Outcome of [`shuffle_calibrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuffleCalibration {
    /// Per-sample noise scale.
    pub sigma: f64,
    /// Largest epsilon for which amplification applies.
    pub max_epsilon: f64,
    pub valid: bool,
}

/// Per-sample noise scale when `n` locally noised contributions are shuffled:
/// `sigma = c_shuf * kappa * s * sqrt(ln(1/delta) ln(n/delta)) / (epsilon sqrt(n))`,
/// valid while `epsilon <= c_eps * sqrt(ln(n/delta) / n)`.
pub fn shuffle_calibrate(
    n: usize,
    budget: PrivacyBudget,
    sensitivity_star: f64,
    kappa: f64,
    constants: ShuffleConstants,
) -> Result<ShuffleCalibration> {
    if n < 2 {
        return Err(Error::invalid(format!("shuffling needs n >= 2, got {n}")));
    }
    check_sensitivity(sensitivity_star)?;
    let nf = n as f64;
    let (eps, delta) = (budget.epsilon, budget.delta);
    let ln_n_delta = log(nf / delta);
    let sigma = constants.c_shuf * kappa * sensitivity_star * sqrt(log(1.0 / delta) * ln_n_delta)
        / (eps * sqrt(nf));
    let max_epsilon = constants.c_eps * sqrt(ln_n_delta / nf);
    Ok(ShuffleCalibration {
        sigma,
        max_epsilon,
        valid: eps <= max_epsilon,
    })
}

/// Replace-one sensitivity of an average of `n` vectors each bounded by `bound`.
pub fn average_sensitivity(bound: f64, n: usize) -> f64 {
    2.0 * bound / n as f64
}

/// Sensitivity of the approximate-minimiser offset `theta_2 - theta_1` for an
/// `alpha`-accurate solve of a `lambda`-strongly convex objective.
pub fn objp_offset_sensitivity(alpha: f64, lambda: f64) -> f64 {
    sqrt(8.0 * alpha / lambda)
}
