//! Text reports for `dpsco mech-check`.

use std::fmt::Write as _;

use dpsco_core::mechanisms::{
    advanced_composition, gaussian_noise_sigma2, gaussian_sample, gg_calibrate, gg_sample, GgNoiseSpec,
    PrivacyBudget,
};
use dpsco_core::space::lp_norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, HarnessResult};
use crate::stats::{chi_cdf, chi_moment, ks_pvalue, ks_statistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Gg,
    Gauss,
    Compose,
}

impl Check {
    pub fn parse(s: &str) -> HarnessResult<Self> {
        match s {
            "gg" => Ok(Check::Gg),
            "gauss" => Ok(Check::Gauss),
            "compose" => Ok(Check::Compose),
            other => Err(HarnessError::config(format!(
                "unknown check {other:?}; use gg, gauss or compose"
            ))),
        }
    }
}

/// Moments and KS statistics of `||z||_r / sigma` for one sampler setting.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusCheck {
    pub r: f64,
    pub d: usize,
    pub draws: usize,
    /// `(m, empirical, exact)` for each requested moment order.
    pub moments: Vec<(f64, f64, f64)>,
    pub ks_stat: f64,
    pub ks_p: f64,
    /// Largest `|mean_i| / se_i` over coordinates.
    pub max_coord_z: f64,
}

pub fn radius_check(r: f64, d: usize, sigma: f64, draws: usize, orders: &[f64], seed: u64) -> HarnessResult<RadiusCheck> {
    let spec = GgNoiseSpec::new(sigma * sigma, r, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = Vec::with_capacity(draws);
    let mut sum = vec![0.0; d];
    let mut sumsq = vec![0.0; d];
    for _ in 0..draws {
        let z = gg_sample(&spec, &mut rng);
        for (j, v) in z.iter().enumerate() {
            sum[j] += v;
            sumsq[j] += v * v;
        }
        radii.push(lp_norm(&z, r)? / sigma);
    }
    let nf = draws as f64;
    let moments = orders
        .iter()
        .map(|&m| {
            let emp = radii.iter().map(|t| (sigma * t).powf(m)).sum::<f64>() / nf;
            (m, emp, chi_moment(d, sigma, m))
        })
        .collect();
    let max_coord_z = (0..d)
        .map(|j| {
            let mean = sum[j] / nf;
            let var = (sumsq[j] / nf - mean * mean).max(0.0);
            (mean / (var / nf).sqrt()).abs()
        })
        .fold(0.0, f64::max);
    let ks_stat = ks_statistic(&radii, chi_cdf(d));
    Ok(RadiusCheck {
        r,
        d,
        draws,
        moments,
        ks_stat,
        ks_p: ks_pvalue(ks_stat, draws),
        max_coord_z,
    })
}

fn gg_report(draws: usize, seed: u64) -> HarnessResult<String> {
    let mut out = String::new();
    writeln!(out, "generalized gaussian sampler, d=10, sigma=1, draws={draws}").unwrap();
    writeln!(out, "{:>4} {:>3} {:>12} {:>12} {:>8} {:>9} {:>9} {:>8}", "r", "m", "empirical", "exact", "rel_err", "ks_stat", "ks_p", "max|z|").unwrap();
    for (k, &r) in [2.0, 3.0, 8.0].iter().enumerate() {
        let c = radius_check(r, 10, 1.0, draws, &[1.0, 2.0, 4.0], seed.wrapping_add(k as u64))?;
        for &(m, emp, exact) in &c.moments {
            writeln!(
                out,
                "{:>4} {:>3} {:>12.6} {:>12.6} {:>8.4} {:>9.5} {:>9.4} {:>8.3}",
                r,
                m,
                emp,
                exact,
                (emp - exact).abs() / exact,
                c.ks_stat,
                c.ks_p,
                c.max_coord_z
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn gauss_report(draws: usize, seed: u64) -> HarnessResult<String> {
    let mut out = String::new();
    writeln!(out, "calibration, sensitivity 1").unwrap();
    writeln!(out, "{:>8} {:>8} {:>14} {:>14} {:>14}", "epsilon", "delta", "gauss_sigma2", "gg_sigma2_k1", "gg_sigma2_k10").unwrap();
    for &eps in &[0.1, 0.5, 1.0, 2.0] {
        for &delta in &[1e-5, 1e-8] {
            let b = PrivacyBudget::new(eps, delta)?;
            writeln!(
                out,
                "{:>8} {:>8.0e} {:>14.6} {:>14.6} {:>14.6}",
                eps,
                delta,
                gaussian_noise_sigma2(1.0, b)?,
                gg_calibrate(1.0, 1.0, b)?,
                gg_calibrate(1.0, 10.0, b)?
            )
            .unwrap();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 10;
    let mut sq = 0.0;
    for _ in 0..draws {
        sq += gaussian_sample(d, 1.0, &mut rng).iter().map(|v| v * v).sum::<f64>();
    }
    writeln!(out, "gaussian sampler: mean ||z||_2^2 = {:.5} (exact {d}), draws={draws}", sq / draws as f64).unwrap();
    Ok(out)
}

fn compose_report() -> HarnessResult<String> {
    let mut out = String::new();
    writeln!(out, "advanced composition, per-step budget").unwrap();
    writeln!(out, "{:>8} {:>8} {:>6} {:>14} {:>12}", "epsilon", "delta", "T", "eps_step", "delta_step").unwrap();
    for &eps in &[0.1, 0.5, 0.9] {
        for &t in &[1usize, 8, 64, 1024] {
            let b = PrivacyBudget::new(eps, 1e-5)?;
            let (e, d) = advanced_composition(b, t)?;
            writeln!(out, "{:>8} {:>8.0e} {:>6} {:>14.8} {:>12.3e}", eps, 1e-5, t, e, d).unwrap();
        }
    }
    Ok(out)
}

pub fn report(check: Check, draws: usize, seed: u64) -> HarnessResult<String> {
    match check {
        Check::Gg => gg_report(draws, seed),
        Check::Gauss => gauss_report(draws, seed),
        Check::Compose => compose_report(),
    }
}
