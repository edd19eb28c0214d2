use alloc::format;
use alloc::vec::Vec;
use libm::{ceil, log, log2, pow, sqrt};
use rand::Rng;

use super::{check_problem, MdConfig, MdOutput, TruncationStats};
use crate::mechanisms::{gg_sample, GgNoiseSpec, PrivacyBudget};
use crate::problems::{empirical_grad_into, Dataset, LossModel};
use crate::space::{grad_phi, inv_grad_phi};
use crate::vector;
use crate::{Error, Result, Warning};

/// Automatic iteration count `ceil(c_T (n eps kappa / sqrt(d ln(1/delta)))^{2/5})`.
pub fn reg_md_auto_iterations(n: usize, d: usize, kappa: f64, budget: PrivacyBudget, t_scale: f64) -> usize {
    let base = n as f64 * budget.epsilon() * kappa / sqrt(d as f64 * log(1.0 / budget.delta()));
    (ceil(t_scale * pow(base, 0.4)) as usize).max(1)
}

/// Noise variance `64 L^2 kappa T ln(1/delta) / (n^2 eps^2)` of the per-step GG draw.
pub fn reg_md_sigma2(l: f64, kappa: f64, t: usize, n: usize, budget: PrivacyBudget) -> f64 {
    let (eps, nf) = (budget.epsilon(), n as f64);
    64.0 * l * l * kappa * t as f64 * log(1.0 / budget.delta()) / (nf * nf * eps * eps)
}

/// Normalised output weights `c^t / sum_k c^k`, `t = 1..=T`, with
/// `c = (2 beta + alpha) / (2 beta)`. Computed through the same running
/// accumulator as the solver, so they never overflow.
pub fn reg_md_output_weights(alpha: f64, beta: f64, t: usize) -> Vec<f64> {
    let c = (2.0 * beta + alpha) / (2.0 * beta);
    let mut weights: Vec<f64> = Vec::with_capacity(t);
    let mut u = 0.0;
    for k in 0..t {
        u = if k == 0 { 1.0 } else { 1.0 + u / c };
        let share = 1.0 / u;
        weights.iter_mut().for_each(|w| *w *= 1.0 - share);
        weights.push(share);
    }
    weights
}

/// Noisy regularised mirror descent over `R^d` for `1 < p < 2`.
///
/// Starting at `w_1 = 0`, each step solves
/// `argmin <grad L(w_t) + g_t, w> + beta D_phi(w, w_t) + alpha phi(w)` in
/// closed form,
/// `w_{t+1} = grad phi*((beta grad phi(w_t) - grad L(w_t) - g_t) / (beta + alpha))`,
/// with `g_t` Generalized Gaussian over `||.||_{r_noise}`. The output is the
/// geometrically weighted average of `w_2, ..., w_{T+1}`.
pub fn noisy_reg_md<R: Rng + ?Sized>(
    data: &Dataset,
    loss: &LossModel,
    cfg: &MdConfig,
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<MdOutput> {
    let spec = &cfg.space;
    check_problem(data, loss, spec)?;
    let (n, d) = (data.n(), data.d());
    let (l, beta, kappa) = (loss.lipschitz(), loss.smoothness(), spec.kappa());
    let mut warnings = Vec::new();

    let t = match cfg.t {
        Some(0) => return Err(Error::invalid("T must be at least 1")),
        Some(t) => t,
        None => reg_md_auto_iterations(n, d, kappa, budget, cfg.constants.t_scale),
    };
    let alpha = match cfg.alpha_reg {
        Some(a) if a > 0.0 && a.is_finite() => a,
        Some(a) => return Err(Error::invalid(format!("alpha_reg must be positive, got {a}"))),
        None => {
            let raw = log2(n as f64 / t as f64);
            let factor = if raw < 1.0 {
                warnings.push(Warning::ParameterClamped {
                    name: "alpha_reg log factor",
                    from: raw,
                    to: 1.0,
                });
                1.0
            } else {
                raw
            };
            4.0 * beta / t as f64 * factor
        }
    };

    let sigma2 = reg_md_sigma2(l, kappa, t, n, budget);
    let noise = GgNoiseSpec::new(sigma2, spec.r_noise(), d)?;
    let c = (2.0 * beta + alpha) / (2.0 * beta);

    let mut w = vector::zeros(d);
    let mut avg = vector::zeros(d);
    let mut grad = vector::zeros(d);
    let mut u = 0.0;
    for k in 0..t {
        empirical_grad_into(&w, data, loss, &mut grad);
        let g = gg_sample(&noise, rng);
        let mut z = grad_phi(&w, spec)?;
        vector::scale(beta, &mut z);
        vector::axpy(-1.0, &grad, &mut z);
        vector::axpy(-1.0, &g, &mut z);
        vector::scale(1.0 / (beta + alpha), &mut z);
        w = inv_grad_phi(&z, spec)?;
        vector::ensure_finite(&w, "mirror descent iterate")?;
        u = if k == 0 { 1.0 } else { 1.0 + u / c };
        let share = 1.0 / u;
        avg.iter_mut().zip(&w).for_each(|(a, wi)| *a += share * (wi - *a));
    }

    Ok(MdOutput {
        w: avg,
        t,
        gamma: beta,
        alpha_reg: alpha,
        lambda_trunc: 0.0,
        sigma: sqrt(sigma2),
        truncation: TruncationStats::default(),
        max_step_residual: 0.0,
        warnings,
    })
}
