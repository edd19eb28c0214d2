//! Losses, constraint sets, synthetic distributions and risk evaluation.

mod constraint;
mod dataset;
mod distribution;
mod loss;
mod width;

use libm::sqrt;
use rand::Rng;

pub use constraint::{project_l1_ball, project_lp_ball, ConstraintSet, LP_PROJECTION_MAX_ITER, LP_PROJECTION_TOL};
pub use dataset::Dataset;
pub use distribution::DataDistribution;
pub use loss::{LossKind, LossModel};
pub use width::gaussian_width_mc;

use crate::vector::{self, Vector};
use crate::{Error, Result};

fn check(w: &[f64], data: &Dataset) -> Result<()> {
    vector::ensure_dim(w, data.d())?;
    vector::ensure_finite(w, "parameter")
}

/// `(1/n) sum_i l(w; x_i, y_i)`.
pub fn empirical_risk(w: &[f64], data: &Dataset, loss: &LossModel) -> Result<f64> {
    check(w, data)?;
    let n = data.n();
    let total: f64 = (0..n).map(|i| loss.value(w, data.x(i), data.y(i))).sum();
    Ok(total / n as f64)
}

/// `(1/n) sum_i grad l(w; x_i, y_i)`.
pub fn empirical_grad(w: &[f64], data: &Dataset, loss: &LossModel) -> Result<Vector> {
    check(w, data)?;
    let mut g = vector::zeros(w.len());
    empirical_grad_into(w, data, loss, &mut g);
    Ok(g)
}

/// Unchecked variant of [`empirical_grad`] writing into `out`.
pub(crate) fn empirical_grad_into(w: &[f64], data: &Dataset, loss: &LossModel, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let scale = 1.0 / data.n() as f64;
    for i in 0..data.n() {
        loss.add_gradient(w, data.x(i), data.y(i), scale, out);
    }
}

/// A risk value with its Monte Carlo standard error (0 for closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn uses_oracle(dist: &DataDistribution, loss: &LossModel) -> bool {
    matches!(dist, DataDistribution::MeanPoint { .. }) && matches!(loss.kind(), LossKind::MeanPoint)
}

fn check_eval(w: &[f64], dist: &DataDistribution, m_eval: usize) -> Result<()> {
    vector::ensure_dim(w, dist.d())?;
    vector::ensure_finite(w, "parameter")?;
    if m_eval == 0 {
        return Err(Error::invalid("m_eval must be at least 1"));
    }
    Ok(())
}

/// Population risk `E l(w; x)`: closed form for the mean-point pair,
/// otherwise the average over `m_eval` fresh draws.
pub fn population_risk<R: Rng + ?Sized>(
    w: &[f64],
    dist: &DataDistribution,
    loss: &LossModel,
    m_eval: usize,
    rng: &mut R,
) -> Result<RiskEstimate> {
    check_eval(w, dist, m_eval)?;
    if uses_oracle(dist, loss) {
        let value = dist.mean_point_risk(w).expect("mean-point distribution");
        return Ok(RiskEstimate { value, std_error: 0.0 });
    }
    Ok(mc_mean(m_eval, dist, rng, |x, y| loss.value(w, x, y)))
}

/// Excess risk `L(w) - L(reference)`. Monte Carlo estimates use the same
/// draws for both terms, so the error bar reflects only the difference.
pub fn excess_risk<R: Rng + ?Sized>(
    w: &[f64],
    reference: &[f64],
    dist: &DataDistribution,
    loss: &LossModel,
    m_eval: usize,
    rng: &mut R,
) -> Result<RiskEstimate> {
    check_eval(w, dist, m_eval)?;
    check_eval(reference, dist, m_eval)?;
    if uses_oracle(dist, loss) {
        let a = dist.mean_point_risk(w).expect("mean-point distribution");
        let b = dist.mean_point_risk(reference).expect("mean-point distribution");
        return Ok(RiskEstimate {
            value: a - b,
            std_error: 0.0,
        });
    }
    Ok(mc_mean(m_eval, dist, rng, |x, y| {
        loss.value(w, x, y) - loss.value(reference, x, y)
    }))
}

fn mc_mean<R: Rng + ?Sized>(
    m: usize,
    dist: &DataDistribution,
    rng: &mut R,
    mut f: impl FnMut(&[f64], f64) -> f64,
) -> RiskEstimate {
    let mut x = vector::zeros(dist.d());
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=m {
        let y = dist.sample_row(rng, &mut x);
        let v = f(&x, y);
        let delta = v - mean;
        mean += delta / k as f64;
        m2 += delta * (v - mean);
    }
    let std_error = if m > 1 {
        sqrt(m2 / ((m - 1) as f64 * m as f64))
    } else {
        f64::INFINITY
    };
    RiskEstimate { value: mean, std_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_examples() {
        let loss = LossModel::mean_point(10.0).unwrap();
        let one = Dataset::from_rows(&[vec![1.0, 2.0]], None).unwrap();
        let w = [0.5, -1.0];
        assert_eq!(empirical_risk(&w, &one, &loss).unwrap(), loss.value(&w, &[1.0, 2.0], 0.0));

        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]], None).unwrap();
        assert_eq!(empirical_risk(&[0.0, 0.0], &ds, &loss).unwrap(), 1.0);
        let g = empirical_grad(&[1.0, 0.0], &ds, &loss).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(empirical_risk(&[0.0], &ds, &loss).is_err());
    }

    #[test]
    fn mean_point_oracle_and_mc_agree() {
        let dist = DataDistribution::mean_point(vec![0.2, 0.1, -0.3], 1.5).unwrap();
        let loss = LossModel::mean_point(5.0).unwrap();
        let mu = [0.2, 0.1, -0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let oracle = population_risk(&mu, &dist, &loss, 1, &mut rng).unwrap();
        assert_eq!(oracle.value, 0.5 * 1.5 * 1.5);
        assert_eq!(excess_risk(&mu, &mu, &dist, &loss, 1, &mut rng).unwrap().value, 0.0);

        let mc = mc_mean(100_000, &dist, &mut rng, |x, y| loss.value(&mu, x, y));
        assert!((mc.value - oracle.value).abs() <= 3.0 * mc.std_error.max(1e-12));
    }

    #[test]
    fn paired_excess_risk_is_nonnegative_at_minimizer() {
        let ws = vec![0.5, -0.5];
        let dist = DataDistribution::logistic(ws.clone(), 2.0, 2.0).unwrap();
        let loss = LossModel::logistic(2.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = excess_risk(&[0.0, 0.0], &ws, &dist, &loss, 50_000, &mut rng).unwrap();
        assert!(e.value > 3.0 * e.std_error);
        let zero = excess_risk(&ws, &ws, &dist, &loss, 10, &mut rng).unwrap();
        assert_eq!(zero.value, 0.0);
    }
}
