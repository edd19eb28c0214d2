use libm::sqrt;
use rand::Rng;

use super::ConstraintSet;
use crate::mechanisms::gaussian_sample;
use crate::{Error, Result};

/// Monte Carlo Gaussian width `E sup_{w in C} <xi, w>` with `xi ~ N(0, I_d)`.
/// Returns the sample mean of the support function and its standard error.
pub fn gaussian_width_mc<R: Rng + ?Sized>(c: &ConstraintSet, m: usize, rng: &mut R) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::invalid("Gaussian width needs at least two draws"));
    }
    // Welford's update keeps the variance accurate for large m
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=m {
        let xi = gaussian_sample(c.d(), 1.0, rng);
        let h = c.support(&xi);
        let delta = h - mean;
        mean += delta / k as f64;
        m2 += delta * (h - mean);
    }
    let var = m2 / (m - 1) as f64;
    Ok((mean, sqrt(var / m as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    /// `E ||xi||_inf = int_0^inf 1 - (2 Phi(t) - 1)^d dt`, by Simpson's rule.
    fn expected_max_abs(d: usize) -> f64 {
        let n = Normal::new(0.0, 1.0).unwrap();
        let f = |t: f64| 1.0 - (2.0 * n.cdf(t) - 1.0).powi(d as i32);
        let (a, b, k) = (0.0, 12.0, 4000);
        let h = (b - a) / k as f64;
        let mut s = f(a) + f(b);
        for i in 1..k {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn l2_ball_width_matches_chi_mean() {
        let c = ConstraintSet::l2_ball(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (w, se) = gaussian_width_mc(&c, 100_000, &mut rng).unwrap();
        let oracle = 2f64.sqrt() * statrs::function::gamma::gamma(1.5);
        assert!((oracle - 1.2533).abs() < 1e-4);
        assert!((w - oracle).abs() <= 3.0 * se, "{w} vs {oracle} (se {se})");
    }

    #[test]
    fn l1_ball_width_matches_quadrature() {
        let c = ConstraintSet::l1_ball(1.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, se) = gaussian_width_mc(&c, 20_000, &mut rng).unwrap();
        let oracle = expected_max_abs(100);
        assert!((w - oracle).abs() <= 3.0 * se, "{w} vs {oracle} (se {se})");
    }

    #[test]
    fn width_is_homogeneous() {
        let c = ConstraintSet::lp_ball(1.5, 1.0, 10).unwrap();
        let c2 = c.scaled(2.0).unwrap();
        let (w1, _) = gaussian_width_mc(&c, 1000, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let (w2, _) = gaussian_width_mc(&c2, 1000, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert!((w2 - 2.0 * w1).abs() < 1e-12);
        assert!(gaussian_width_mc(&c, 1, &mut ChaCha8Rng::seed_from_u64(7)).is_err());
    }
}
