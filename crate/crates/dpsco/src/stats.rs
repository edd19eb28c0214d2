//! Goodness-of-fit helpers used by the sampler checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Asymptotic p-value of a KS statistic `d` from `n` samples, with
/// Stephens' finite-sample adjustment of the argument.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// CDF of the chi distribution with `d` degrees of freedom.
pub fn chi_cdf(d: usize) -> impl Fn(f64) -> f64 {
    let chi2 = ChiSquared::new(d as f64).expect("positive degrees of freedom");
    move |x: f64| if x <= 0.0 { 0.0 } else { chi2.cdf(x * x) }
}

/// `E[(sigma chi_d)^m] = (2 sigma^2)^{m/2} Gamma((m+d)/2) / Gamma(d/2)`.
pub fn chi_moment(d: usize, sigma: f64, m: f64) -> f64 {
    let df = d as f64;
    (2.0 * sigma * sigma).powf(m / 2.0) * (ln_gamma((m + df) / 2.0) - ln_gamma(df / 2.0)).exp()
}

/// `E max_i |xi_i|` for `xi ~ N(0, I_d)`, by Simpson quadrature of
/// `int_0^inf 1 - P(|Z| <= t)^d dt`.
pub fn expected_max_abs_gaussian(d: usize) -> f64 {
    let tail = |t: f64| 1.0 - erf(t / std::f64::consts::SQRT_2).powi(d as i32);
    let (a, b, k) = (0.0, 40.0, 200_000usize);
    let h = (b - a) / k as f64;
    let mut s = tail(a) + tail(b);
    for i in 1..k {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * tail(a + i as f64 * h);
    }
    s * h / 3.0
}
