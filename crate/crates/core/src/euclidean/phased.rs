use alloc::format;
use alloc::vec::Vec;
use libm::{ceil, log, log2, sqrt};
use rand::Rng;

use super::objp::euclidean_constants;
use crate::mechanisms::{gaussian_sample, PrivacyBudget};
use crate::problems::{Dataset, LossModel};
use crate::vector::{self, Vector};
use crate::{Error, Result, Warning};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasedSgdConfig {
    pub budget: PrivacyBudget,
    /// Base step size; `None` selects `(1/L) min{4/sqrt(n), eps / (2 sqrt(d ln(1/delta)))}`.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasedSgdOutput {
    pub w: Vector,
    pub eta: f64,
    /// Noise scale of each phase that ran.
    pub sigmas: Vec<f64>,
    /// Shard size of every phase, including empty ones.
    pub shard_sizes: Vec<usize>,
    pub warnings: Vec<Warning>,
}

/// Shard sizes `floor(n / 2^i)` for `i = 1..=ceil(log2 n)`.
pub fn phase_sizes(n: usize) -> Vec<usize> {
    let k = if n <= 1 { 1 } else { ceil(log2(n as f64)) as usize };
    (1..=k).map(|i| n >> i.min(63)).collect()
}

/// Automatic step size.
pub fn auto_step(l: f64, n: usize, d: usize, budget: PrivacyBudget) -> f64 {
    let a = 4.0 / sqrt(n as f64);
    let b = budget.epsilon() / (2.0 * sqrt(d as f64 * log(1.0 / budget.delta())));
    a.min(b) / l
}

/// Phased DP-SGD without projection.
///
/// Phase `i` runs one pass of SGD with step `4^{-i} eta` over the next
/// `floor(n / 2^i)` records, averages its `n_i + 1` iterates and adds
/// `N(0, sigma_i^2 I)` with `sigma_i = 4 L eta_i sqrt(ln(1/delta)) / eps`.
/// Requires `eta <= 1/beta`; `eps > 2 ln(1/delta)` only raises a warning.
pub fn phased_dp_sgd<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    cfg: &PhasedSgdConfig,
    rng: &mut R,
) -> Result<PhasedSgdOutput> {
    let (l, beta) = euclidean_constants(loss)?;
    let (eps, delta) = (cfg.budget.epsilon(), cfg.budget.delta());
    let (n, d) = (data.n(), data.d());
    let mut warnings = Vec::new();
    if eps > 2.0 * log(1.0 / delta) {
        warnings.push(Warning::OutsideStatedRegime {
            what: "phased DP-SGD privacy is stated for eps <= 2 ln(1/delta)",
        });
    }
    let eta = match cfg.eta {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::invalid(format!("step size must be positive, got {e}"))),
        None => auto_step(l, n, d, cfg.budget),
    };
    if eta > 1.0 / beta {
        // the automatic step falls below 1/beta once 4/sqrt(n) <= L/beta
        let min_n = match cfg.eta {
            None => ceil((4.0 * beta / l) * (4.0 * beta / l)) as usize,
            Some(_) => usize::MAX,
        };
        return Err(Error::PrivacyPrecondition {
            reason: format!("step size {eta} exceeds 1/beta = {}", 1.0 / beta),
            min_n,
        });
    }

    let sizes = phase_sizes(n);
    let mut w = vector::zeros(d);
    let mut sigmas = Vec::new();
    let mut offset = 0;
    let mut eta_i = eta;
    for &ni in &sizes {
        eta_i /= 4.0;
        if ni == 0 {
            continue;
        }
        let mut sum = w.clone();
        for t in 0..ni {
            let idx = offset + t;
            let g = loss.gradient(&w, data.x(idx), data.y(idx));
            vector::axpy(-eta_i, &g, &mut w);
            vector::axpy(1.0, &w, &mut sum);
        }
        offset += ni;
        vector::scale(1.0 / (ni as f64 + 1.0), &mut sum);
        let sigma = 4.0 * l * eta_i * sqrt(log(1.0 / delta)) / eps;
        let xi = gaussian_sample(d, sigma, rng);
        w = vector::add(&sum, &xi);
        vector::ensure_finite(&w, "phased SGD iterate")?;
        sigmas.push(sigma);
    }
    Ok(PhasedSgdOutput {
        w,
        eta,
        sigmas,
        shard_sizes: sizes,
        warnings,
    })
}
